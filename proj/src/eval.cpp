#include "gyrocal/eval.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "gyrocal/errors.hpp"
#include "gyrocal/estimator.hpp"
#include "gyrocal/io_util.hpp"

namespace gyrocal {

RmseResult rmse(std::span<const Vec3> predictions, std::span<const Vec3> labels) {
  if (predictions.size() != labels.size()) throw DimensionError("rmse: prediction and label counts differ");
  if (predictions.empty()) throw InsufficientDataError("rmse: no samples");
  Vec3 acc = Vec3::Zero();
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    acc += (predictions[i] - labels[i]).cwiseAbs2();
  }
  const double n = static_cast<double>(predictions.size());
  RmseResult r;
  r.per_axis = 1e3 * (acc / n).cwiseSqrt();
  r.pooled = 1e3 * std::sqrt(acc.sum() / (3.0 * n));
  return r;
}

double gamma_ratio(double eps_model, double eps_baseline) {
  if (!(eps_baseline > 0.0)) throw DivisionError("gamma ratio needs a positive baseline RMSE");
  return 100.0 * eps_model / eps_baseline;
}

double full_record_baseline_rmse(std::span<const SignalRecord> records) {
  std::vector<Vec3> pred, truth;
  for (const SignalRecord& r : records) {
    if (!r.true_bias) throw InvalidParameterError("record '" + r.source_id + "' has no true bias; cannot score full-record averaging");
    pred.push_back(make_label(r));
    truth.push_back(*r.true_bias);
  }
  return rmse(pred, truth).pooled;
}

EvalResult evaluate(const std::map<int, BiasEstimator>& estimators,
                    const std::map<int, const LabeledDataset*>& datasets,
                    std::span<const SignalRecord> full_records, int /*threads*/) {
  std::set<int> ka, kb;
  for (const auto& [k, _] : estimators) ka.insert(k);
  for (const auto& [k, _] : datasets) kb.insert(k);
  if (ka != kb || ka.empty()) throw ConfigError("model and dataset K sets do not match");

  EvalResult result;
  result.baseline60_rmse = full_record_baseline_rmse(full_records);
  if (!full_records.empty()) result.record_seconds = full_records.front().duration;

  for (auto it = ka.rbegin(); it != ka.rend(); ++it) {
    const int k = *it;
    const LabeledDataset& ds = *datasets.at(k);
    if (ds.k != k) throw ConfigError("dataset registered for K=" + std::to_string(k) + " was built with K=" + std::to_string(ds.k));
    const std::vector<std::size_t> idx = ds.indices(Partition::Test);
    if (idx.empty()) throw ConfigError("dataset K=" + std::to_string(k) + " has no test samples");
    std::vector<Vec3> model, mean, labels;
    for (std::size_t i : idx) {
      const LabeledSample& s = ds.samples[i];
      model.push_back(estimators.at(k)(s.window));
      mean.push_back(baseline_bias(s.window));
      labels.push_back(s.label);
    }
    EvalRow row;
    row.k = k;
    row.window_seconds = ds.window_seconds;
    row.model_rmse = rmse(model, labels).pooled;
    row.equal_duration_rmse = rmse(mean, labels).pooled;
    row.baseline60_rmse = result.baseline60_rmse;
    row.gamma = gamma_ratio(row.model_rmse, row.baseline60_rmse);
    row.n_test = idx.size();
    result.rows.push_back(row);
  }
  return result;
}

EvalResult evaluate(const std::map<int, const nn::Network*>& models,
                    const std::map<int, const LabeledDataset*>& datasets,
                    std::span<const SignalRecord> full_records, int threads) {
  // Batch the forward passes per K, then look predictions up by window address.
  std::map<int, std::map<const Window*, Vec3>> cache;
  for (const auto& [k, net] : models) {
    auto ds = datasets.find(k);
    if (ds == datasets.end()) continue;
    std::vector<const Window*> ws;
    for (std::size_t i : ds->second->indices(Partition::Test)) ws.push_back(&ds->second->samples[i].window);
    const std::vector<Vec3> pred = predict_all(*net, ws, threads);
    for (std::size_t j = 0; j < ws.size(); ++j) cache[k][ws[j]] = pred[j];
  }
  std::map<int, BiasEstimator> est;
  for (const auto& [k, net] : models) {
    const nn::Network* model = net;
    const auto* table = &cache[k];
    est[k] = [model, table](const Window& w) {
      auto hit = table->find(&w);
      return hit != table->end() ? hit->second : predict(*model, w);
    };
  }
  return evaluate(est, datasets, full_records, threads);
}

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

}  // namespace

std::string format_table(const EvalResult& result) {
  std::string out;
  out += pad("", 10) + pad("K [-]", 8) + pad("T [sec]", 10) + pad("RMSE [mrad/s]", 16) +
         pad("mean-T RMSE", 14) + pad("gamma [%]", 12) + "\n";
  for (const EvalRow& r : result.rows) {
    out += pad("Model", 10) + pad(std::to_string(r.k), 8) + pad(fixed(r.window_seconds, 1), 10) +
           pad(fixed(r.model_rmse, 5), 16) + pad(fixed(r.equal_duration_rmse, 5), 14) +
           pad(fixed(r.gamma, 2), 12) + "\n";
  }
  out += pad("Baseline", 10) + pad("1", 8) + pad(fixed(result.record_seconds, 1), 10) +
         pad(fixed(result.baseline60_rmse, 5), 16) + pad("", 14) + pad(fixed(100.0, 2), 12) + "\n";
  return out;
}

std::string format_table_csv(const EvalResult& result) {
  std::string out = "kind,k,t_s,model_rmse_mrad_s,baseline60_rmse_mrad_s,equal_duration_rmse_mrad_s,gamma_percent,n_test\n";
  for (const EvalRow& r : result.rows) {
    out += "model," + std::to_string(r.k) + "," + format_double(r.window_seconds) + "," +
           format_double(r.model_rmse) + "," + format_double(r.baseline60_rmse) + "," +
           format_double(r.equal_duration_rmse) + "," + format_double(r.gamma) + "," +
           std::to_string(r.n_test) + "\n";
  }
  out += "baseline,1," + format_double(result.record_seconds) + "," + format_double(result.baseline60_rmse) +
         "," + format_double(result.baseline60_rmse) + ",," + format_double(100.0) + ",\n";
  return out;
}

ResidualCurve residual_report(const SignalRecord& record, std::optional<Vec3> reference) {
  if (!reference) reference = record.true_bias;
  if (!reference) throw InvalidParameterError("residual report needs a true bias or a reference mean");
  const std::size_t n = record.size();
  if (n == 0) throw InsufficientDataError("residual report: empty record");
  ResidualCurve c{std::vector<double>(n), Window(n), Window(n)};
  for (int a = 0; a < 3; ++a) {
    // Welford running mean/variance.
    double mean = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double x = record.samples[t][a];
      const double cnt = static_cast<double>(t + 1);
      const double d = x - mean;
      mean += d / cnt;
      m2 += d * (x - mean);
      c.residual(a, t) = mean - (*reference)[a];
      c.envelope(a, t) = t == 0 ? 0.0 : std::sqrt(m2 / (cnt - 1.0)) / std::sqrt(cnt);
    }
  }
  for (std::size_t t = 0; t < n; ++t) c.time[t] = static_cast<double>(t + 1) / record.fs;
  return c;
}

std::string format_residual_csv(const ResidualCurve& curve) {
  std::string out = "time_s,residual_x,residual_y,residual_z,std_x,std_y,std_z\n";
  for (std::size_t t = 0; t < curve.time.size(); ++t) {
    out += format_double(curve.time[t]);
    for (int a = 0; a < 3; ++a) out += "," + format_double(curve.residual(a, t));
    for (int a = 0; a < 3; ++a) out += "," + format_double(curve.envelope(a, t));
    out += "\n";
  }
  return out;
}

std::string format_model_vs_time_csv(const SignalRecord& record, const Vec3& label,
                                     const std::map<int, const nn::Network*>& models) {
  std::string out = "kind,time_s,error_x,error_y,error_z,error_norm\n";
  const Window mean = running_mean_curve(record);
  const auto emit = [&out](const char* kind, double t, const Vec3& e) {
    out += std::string(kind) + "," + format_double(t) + "," + format_double(e[0]) + "," +
           format_double(e[1]) + "," + format_double(e[2]) + "," + format_double(e.norm()) + "\n";
  };
  for (std::size_t t = 0; t < record.size(); ++t) {
    emit("baseline", static_cast<double>(t + 1) / record.fs,
         Vec3(mean(0, t), mean(1, t), mean(2, t)) - label);
  }
  for (auto it = models.rbegin(); it != models.rend(); ++it) {
    const std::vector<Window> windows = truncate(record, it->first);
    const Vec3 est = predict(*it->second, windows.front());
    emit("model", static_cast<double>(windows.front().length()) / record.fs, est - label);
  }
  return out;
}

}  // namespace gyrocal
