// Acceptance run: one PASS/FAIL line per criterion.
//
//   gyrocal_acceptance [--cli PATH] [--work DIR] [--strict] [criterion...]
//
// Exits 0 once every selected criterion has been evaluated; with --strict the
// exit code is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "gyrocal/allan.hpp"
#include "gyrocal/calib.hpp"
#include "gyrocal/config.hpp"
#include "gyrocal/eval.hpp"
#include "gyrocal/io_util.hpp"

using namespace gyrocal;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

#ifndef GYROCAL_CLI_PATH
#define GYROCAL_CLI_PATH "gyrocal"
#endif

struct Options {
  std::string cli = GYROCAL_CLI_PATH;
  fs::path work = fs::temp_directory_path() / "gyrocal_acceptance";
  bool strict = false;
  std::set<int> only;
};

int g_failed = 0;

void verdict(int id, bool pass, const std::string& detail) {
  std::printf("criterion %2d %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failed;
}

void info(const std::string& s) {
  std::printf("    %s\n", s.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Vec3 record_mean(const SignalRecord& r) {
  Vec3 acc = Vec3::Zero();
  for (const Vec3& v : r.samples) acc += v;
  return acc / static_cast<double>(r.size());
}

double loglog_slope(const AllanCurve& c, double lo, double hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    if (c.taus[i] < lo || c.taus[i] > hi) continue;
    const double x = std::log10(c.taus[i]), y = std::log10(c.sigma[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --- 1, 2: calibration ------------------------------------------------------

ErrorModelParams calibration_truth(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> sf(-0.02, 0.02), ma(-3e-3, 3e-3), b(-0.02, 0.02);
  ErrorModelParams p;
  Misalignment m;
  for (double& v : m) v = ma(rng);
  p.distortion = compose_distortion(Vec3(sf(rng), sf(rng), sf(rng)), m);
  p.bias = Vec3(b(rng), b(rng), b(rng));
  return p;
}

CalibrationParams as_params(const ErrorModelParams& p) {
  CalibrationParams c;
  const Mat3& m = p.distortion.matrix();
  for (int r = 0; r < 3; ++r)
    for (int col = 0; col < 3; ++col) c.m_vec[3 * r + col] = m(r, col);
  c.bias = p.bias;
  return c;
}

double max_rel_param_error(const CalibrationParams& est, const CalibrationParams& truth) {
  const auto e = est.as_vector(), t = truth.as_vector();
  double worst = 0.0;
  for (int i = 0; i < kCalibrationParams; ++i) worst = std::max(worst, std::abs(e[i] - t[i]) / std::abs(t[i]));
  return worst;
}

void criterion1() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  const int trials = 100;
  const auto t0 = Clock::now();
  for (int t = 0; t < trials; ++t) {
    const ErrorModelParams p = calibration_truth(rng);
    std::vector<CalibrationMeasurement> ms;
    for (const Vec3& w : six_point_protocol(1.0)) {
      NoiseCoefficients none;
      ErrorModelParams q = p;
      q.noise = none;
      const SignalRecord r = synthesize_constant_rate(q, w, {}, 1.0, 200.0, 7);
      ms.push_back({w, record_mean(r), 1.0});
    }
    const CalibrationResult res = solve_calibration(assemble_system(ms));
    worst = std::max(worst, max_rel_param_error(res.params, as_params(p)));
  }
  const double per_solve = seconds_since(t0) / trials;
  verdict(1, worst < 1e-9 && per_solve < 1.0,
          fmt("%d random truths, max relative error %.2e (< 1e-9), %.2f ms per calibration (< 1 s)", trials, worst,
              per_solve * 1e3));
}

void criterion2() {
  // Misalignments at the 3 mrad end of the range: a 1% relative bound on a
  // 1 mrad entry is below what 60 s of 1 mrad/s noise can resolve.
  ErrorModelParams p;
  p.distortion = compose_distortion(Vec3(0.02, -0.02, 0.015), Misalignment{3e-3, -3e-3, 3e-3, -3e-3, 3e-3, -3e-3});
  p.bias = Vec3(0.01, -0.01, 0.015);
  p.noise.n = 1e-3 / std::sqrt(200.0);
  const CalibrationParams truth = as_params(p);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<CalibrationMeasurement> ms;
    std::uint64_t s = 1000 + 10 * static_cast<std::uint64_t>(t);
    for (const Vec3& w : six_point_protocol(1.0)) {
      const SignalRecord r = synthesize_constant_rate(p, w, {}, 60.0, 200.0, s++);
      ms.push_back({w, record_mean(r), 60.0});
    }
    worst = std::max(worst, max_rel_param_error(solve_calibration(assemble_system(ms)).params, truth));
  }
  verdict(2, worst < 0.01, fmt("50 trials, worst relative parameter error %.3f%% (< 1%%)", 100 * worst));
}

// --- 3: averaging law -------------------------------------------------------

void criterion3() {
  const double sigma = 2e-3, fs = 200.0;
  ErrorModelParams p;
  p.bias = Vec3(0.01, -0.02, 0.005);
  p.noise.n = sigma / std::sqrt(fs);
  const std::size_t ns[] = {200, 2000, 12000};
  std::vector<std::vector<double>> res(3);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const SignalRecord r = synthesize_stationary(p, {}, 60.0, fs, 5000 + seed);
    const Window curve = running_mean_curve(r);
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 3; ++a) res[i].push_back(curve(a, ns[i] - 1) - p.bias[a]);
  }
  bool pass = true;
  std::string detail;
  for (int i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (double v : res[i]) mean += v;
    mean /= static_cast<double>(res[i].size());
    double ss = 0.0;
    for (double v : res[i]) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(res[i].size() - 1));
    const double want = sigma / std::sqrt(static_cast<double>(ns[i]));
    const double ratio = sd / want;
    pass = pass && std::abs(ratio - 1.0) <= 0.15;
    detail += fmt("n=%zu std/(sigma/sqrt n)=%.3f  ", ns[i], ratio);
  }
  verdict(3, pass, detail + "(200 seeds x 3 axes, within 15%)");
}

// --- 4: Allan ---------------------------------------------------------------

void criterion4() {
  const double fs = 200.0;
  ErrorModelParams white;
  white.noise.n = 1e-4;
  const SignalRecord rw = synthesize_stationary(white, {}, 3600.0, fs, 41);
  const AllanCurve cw = allan_deviation(rw, Axis::X);
  const NoiseFit fw = fit_noise_coefficients(cw);
  const double arw_err = fw.n ? std::abs(fw.n->value - white.noise.n) / white.noise.n : 1.0;
  const double s_white = loglog_slope(cw, 0.05, 10.0);

  ErrorModelParams rrw;
  rrw.noise.k = 1e-5;
  double s_rrw = 0.0;
  const int reps = 3;
  for (int a = 0; a < reps; ++a) {
    const SignalRecord rr = synthesize_stationary(rrw, {}, 7200.0, fs, 43);
    s_rrw += loglog_slope(allan_deviation(rr, static_cast<Axis>(a)), 1.0, 100.0);
  }
  s_rrw /= reps;

  ErrorModelParams constant;
  constant.bias = Vec3(0.0123, -0.004, 0.5);
  const SignalRecord rc = synthesize_stationary(constant, {}, 60.0, fs, 45);
  bool zero = true;
  for (int a = 0; a < 3; ++a) {
    const AllanCurve cc = allan_deviation(rc, static_cast<Axis>(a));
    zero = zero && !cc.sigma.empty() &&
           std::all_of(cc.sigma.begin(), cc.sigma.end(), [](double s) { return s == 0.0; });
  }
  const bool pass = arw_err < 0.05 && std::abs(s_white + 0.5) <= 0.05 && std::abs(s_rrw - 0.5) <= 0.05 && zero;
  verdict(4, pass,
          fmt("ARW error %.2f%% (< 5%%), white slope %.3f, RRW slope %.3f (3 axes, 2 h), constant input %s", 100 * arw_err,
              s_white, s_rrw, zero ? "all zero" : "NOT zero"));
}

// --- 5: gradients -----------------------------------------------------------

std::vector<double> randn(std::size_t n, std::mt19937_64& rng, double s = 1.0) {
  std::normal_distribution<double> nd(0.0, s);
  std::vector<double> v(n);
  for (double& x : v) x = nd(rng);
  return v;
}

void criterion5() {
  std::mt19937_64 rng(77);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  double worst = 0.0;
  std::size_t checked = 0;
  int nets = 0;
  auto run = [&](nn::Shape in, std::vector<nn::LayerSpec> layers, nn::Backend be) {
    nn::Network net(in, std::move(layers));
    const auto p = randn(net.parameter_count(), rng, 0.5);
    std::copy(p.begin(), p.end(), net.params().begin());
    net.set_backend(be);
    const auto x = randn(in.size(), rng), y = randn(net.output_shape().size(), rng);
    const auto r = testing::check_param_gradients(net, x, y);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
    ++nets;
  };
  for (int trial = 0; trial < 10; ++trial) {
    for (nn::Backend be : {nn::Backend::Fast, nn::Backend::Reference}) {
      const int c = pick(1, 4), len = pick(12, 40), oc = pick(1, 5), k = pick(1, 6), st = pick(1, 3);
      const int conv_len = (len - k) / st + 1;
      run({c, len}, {nn::LayerSpec::conv(c, oc, k, st), nn::LayerSpec::dense(oc * conv_len, 3)}, be);
      run({c, len}, {nn::LayerSpec::conv(c, oc, k, st), nn::LayerSpec::relu(), nn::LayerSpec::dense(oc * conv_len, 3)}, be);
      const int w = pick(2, 4), ps = pick(1, w);
      const int pool_len = (conv_len - w) / ps + 1;
      if (pool_len >= 1) {
        run({c, len}, {nn::LayerSpec::conv(c, oc, k, st), nn::LayerSpec::pool(w, ps), nn::LayerSpec::dense(oc * pool_len, 3)}, be);
      }
      const int fin = pick(1, 12), hid = pick(1, 12);
      run({fin, 1}, {nn::LayerSpec::dense(fin, hid), nn::LayerSpec::relu(), nn::LayerSpec::dense(hid, 3)}, be);
    }
  }
  const std::size_t layer_checked = checked;
  const double layer_worst = worst;

  // Whole BiasNet on a 3x200 input, every parameter.
  nn::Network net = BiasNetSpec{}.build(3);
  const auto x = randn(600, rng, 0.5), y = randn(3, rng);
  const auto whole = testing::check_param_gradients(net, x, y);
  worst = std::max(worst, whole.max_rel_error);
  verdict(5, worst < 1e-4,
          fmt("%d random layer nets (%zu params, max rel %.2e), BiasNet 3x200 (%zu params, max rel %.2e); bound 1e-4",
              nets, layer_checked, layer_worst, whole.checked, whole.max_rel_error));
}

// --- 6, 7, 8: training and head-to-head -------------------------------------

struct Trained {
  std::vector<SignalRecord> records;
  std::map<int, BuiltDataset> built;
  std::map<int, TrainResult> results;
  std::map<int, double> seconds;
  double total_seconds = 0.0;
  EvalResult eval;
};

std::vector<SignalRecord> test_records(const std::vector<SignalRecord>& records, const BuiltDataset& b) {
  std::vector<SignalRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (b.sources[i].partition == Partition::Test) out.push_back(records[i]);
  return out;
}

Trained train_all(const RunConfig& cfg) {
  Trained t;
  t.records = simulate_sources(cfg.simulation, cfg.seed);
  for (int k : cfg.k_values) {
    t.built.emplace(k, build_dataset(t.records, dataset_options_for(cfg, k)));
    const TrainConfig tc = train_config_for(cfg, k);
    TrainControl ctl;
    const auto t0 = Clock::now();
    ctl.on_epoch = [&](int e, double tr, double va) {
      if (e == 1 || e % 25 == 0) info(fmt("K=%d epoch %d train %.5f val %.5f mrad/s (%.0f s)", k, e, tr, va, seconds_since(t0)));
    };
    t.results.emplace(k, train(t.built.at(k).dataset, network_for(cfg, k), tc, ctl));
    t.seconds[k] = seconds_since(t0);
    t.total_seconds += t.seconds[k];
    const TrainResult& r = t.results.at(k);
    info(fmt("K=%d: %d epochs%s, best epoch %d, %.1f s", k, r.epochs_run, r.early_stopped ? " (early stop)" : "",
             r.best_epoch, t.seconds[k]));
  }
  std::map<int, const nn::Network*> models;
  std::map<int, const LabeledDataset*> datasets;
  for (int k : cfg.k_values) {
    models[k] = &t.results.at(k).model;
    datasets[k] = &t.built.at(k).dataset;
  }
  t.eval = evaluate(models, datasets, test_records(t.records, t.built.at(cfg.k_values.front())), cfg.train.threads);
  return t;
}

void criterion6(const RunConfig& cfg, const Trained& t) {
  bool drops = true, ordered = true;
  double prev = 0.0;
  std::string detail;
  for (std::size_t i = 0; i < cfg.k_values.size(); ++i) {
    const int k = cfg.k_values[i];
    const TrainResult& r = t.results.at(k);
    const double first = r.curve.val_rmse.front();
    const double best = r.curve.val_rmse.at(static_cast<std::size_t>(r.best_epoch - 1));
    const double drop = 1.0 - best / first;
    drops = drops && drop >= 0.9;
    if (i > 0) ordered = ordered && best < prev;
    prev = best;
    detail += fmt("K=%d %.3f->%.3f (-%.0f%%)  ", k, first, best, 100 * drop);
  }
  const bool fast = t.total_seconds < 600.0;
  verdict(6, drops && ordered && fast,
          detail + fmt("| drop>=90%% %s, ordering %s, %.0f s total %s", drops ? "yes" : "no", ordered ? "yes" : "no",
                       t.total_seconds, fast ? "(< 600 s)" : "(>= 600 s)"));
  // The equal-duration mean bounds what any window estimator reaches here.
  for (const EvalRow& row : t.eval.rows) {
    const double first = t.results.at(row.k).curve.val_rmse.front();
    info(fmt("K=%d: mean-T test RMSE %.3f mrad/s is %.0f%% of the epoch-1 validation RMSE", row.k,
             row.equal_duration_rmse, 100 * row.equal_duration_rmse / first));
  }
}

void criterion7(const Trained& t) {
  bool pass = true;
  std::string detail;
  for (const EvalRow& row : t.eval.rows) {
    const double ratio = row.model_rmse / row.equal_duration_rmse;
    pass = pass && ratio <= 1.25;
    detail += fmt("T=%.0fs %.4f/%.4f=%.2fx  ", row.window_seconds, row.model_rmse, row.equal_duration_rmse, ratio);
  }
  verdict(7, pass, detail + "(<= 1.25x)");
  std::istringstream table(format_table(t.eval));
  for (std::string line; std::getline(table, line);) info(line);
}

// Shifting the input by a constant delta should shift the estimate by delta.
void report_equivariance(const Trained& t, int k, double bias_sigma) {
  const LabeledDataset& ds = t.built.at(k).dataset;
  const nn::Network& model = t.results.at(k).model;
  std::size_t ok = 0, total = 0;
  for (std::size_t i : ds.indices(Partition::Test)) {
    if (i % 10) continue;
    const Window& x = ds.samples[i].window;
    const Vec3 base = predict(model, x);
    for (double m : {-2.0, -0.5, 0.5, 2.0}) {
      for (int a = 0; a < 3; ++a) {
        Vec3 d = Vec3::Zero();
        d[a] = m * bias_sigma;
        Window shifted = x;
        for (double& v : shifted.axis(a)) v += d[a];
        const Vec3 diff = predict(model, shifted) - base - d;
        ok += diff.norm() < 0.2 * d.norm();
        ++total;
      }
    }
  }
  info(fmt("K=%d shift equivariance |f(x+d)-f(x)-d| < 0.2|d|, |d| <= 2 bias sigma: %zu of %zu", k, ok, total));
}

void criterion8() {
  RunConfig cfg = disturbance_run_config();
  cfg.k_values = {60};
  const Trained t = train_all(cfg);
  const EvalRow& row = t.eval.rows.front();
  const double gain = 1.0 - row.model_rmse / row.equal_duration_rmse;
  verdict(8, gain >= 0.2,
          fmt("T=1 s, sinusoid 5-20 Hz at 5 sigma: model %.4f vs mean %.4f mrad/s, improvement %.1f%% (>= 20%%)",
              row.model_rmse, row.equal_duration_rmse, 100 * gain));
}

// --- 9, 10: reports and reproducibility -------------------------------------

struct Pipeline {
  fs::path dir;
  bool ok = false;
};

fs::path small_config(const Options& o) {
  fs::create_directories(o.work);
  const fs::path p = o.work / "small.json";
  std::ofstream(p) << R"({
  "seed": 7,
  "k_values": [60, 20, 10],
  "simulation": {"records_per_sensor": 2},
  "dataset": {"n_copies": 20},
  "train": {"epochs": 4, "threads": 1}
}
)";
  return p;
}

bool run_cli(const Options& o, const fs::path& cfg, const fs::path& out, const fs::path& log) {
  fs::remove_all(out);
  const std::string cmd = "\"" + o.cli + "\" run -c \"" + cfg.string() + "\" -o \"" + out.string() + "\" > \"" +
                          log.string() + "\" 2>&1";
  return std::system(cmd.c_str()) == 0;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) f.push_back(cur);
  if (!line.empty() && line.back() == ',') f.emplace_back();
  return f;
}

void criterion9(const fs::path& report_dir, const Trained* big) {
  bool pass = gamma_ratio(0.43959, 0.43959) == 100.0 && gamma_ratio(1.0, 1.0) == 100.0 &&
              gamma_ratio(123.456789, 123.456789) == 100.0;
  const double g1 = gamma_ratio(0.79598, 0.43959), g2 = gamma_ratio(0.68328, 0.43959);
  // 155.4357 rounds to 155.44, so the example pairs get the same 0.01 tolerance.
  pass = pass && std::abs(g1 - 181.07) <= 0.01 && std::abs(g2 - 155.43) <= 0.01;
  std::string detail = fmt("(0.79598,0.43959)->%.4f (0.68328,0.43959)->%.4f, gamma(x,x)=100  ", g1, g2);

  auto check_pair = [&](const std::string& csv_text, const std::string& table_text) {
    // Model rows from the CSV in order, against the gamma column of the table.
    std::vector<double> recomputed;
    std::istringstream cs(csv_text);
    for (std::string line; std::getline(cs, line);) {
      if (line.rfind("model,", 0) != 0) continue;
      const auto f = split_csv(line);
      recomputed.push_back(gamma_ratio(std::stod(f[3]), std::stod(f[4])));
    }
    std::vector<double> printed;
    std::istringstream ts(table_text);
    for (std::string line; std::getline(ts, line);) {
      std::istringstream ls(line);
      std::string kind;
      ls >> kind;
      if (kind != "Model") continue;
      std::vector<std::string> cols;
      for (std::string c; ls >> c;) cols.push_back(c);
      printed.push_back(std::stod(cols.back()));
    }
    double worst = 0.0;
    const bool same = !printed.empty() && printed.size() == recomputed.size();
    for (std::size_t i = 0; same && i < printed.size(); ++i) worst = std::max(worst, std::abs(printed[i] - recomputed[i]));
    return std::pair{same && worst <= 0.01, worst};
  };
  int reports = 0;
  if (fs::exists(report_dir / "table.csv")) {
    const auto [ok, worst] = check_pair(read_text_file(report_dir / "table.csv"), read_text_file(report_dir / "table.txt"));
    pass = pass && ok;
    detail += fmt("pipeline report max |dgamma| %.4f  ", worst);
    ++reports;
  }
  if (big) {
    const auto [ok, worst] = check_pair(format_table_csv(big->eval), format_table(big->eval));
    pass = pass && ok;
    detail += fmt("four-K report max |dgamma| %.4f  ", worst);
    ++reports;
  }
  verdict(9, pass && reports > 0, detail + "(<= 0.01)");
}

void criterion10(const Options& o, const fs::path& first) {
  const fs::path cfg = small_config(o);
  const fs::path keep = o.work / "run_a";
  fs::remove_all(keep);
  fs::rename(first, keep);
  const bool ran = run_cli(o, cfg, first, o.work / "run_b.log");
  if (!ran) {
    verdict(10, false, "second pipeline run failed; see " + (o.work / "run_b.log").string());
    return;
  }
  const auto a = tree_bytes(keep), b = tree_bytes(first);
  std::size_t differ = 0;
  std::string first_diff;
  for (const auto& [name, bytes] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != bytes) {
      if (!differ) first_diff = name;
      ++differ;
    }
  }
  differ += b.size() > a.size() ? b.size() - a.size() : 0;
  std::size_t ckpts = 0, reports = 0;
  for (const auto& [name, _] : a) {
    ckpts += name.ends_with(".ckpt");
    reports += name.rfind("report", 0) == 0;
  }
  verdict(10, differ == 0 && ckpts > 0 && reports > 0,
          fmt("two runs of simulate/dataset/train/evaluate: %zu files (%zu checkpoints, %zu reports), %zu differ%s", a.size(),
              ckpts, reports, differ, differ ? (" e.g. " + first_diff).c_str() : ""));
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) o.cli = argv[++i];
    else if (a == "--work" && i + 1 < argc) o.work = argv[++i];
    else if (a == "--strict") o.strict = true;
    else if (!a.empty() && std::isdigit(static_cast<unsigned char>(a[0]))) o.only.insert(std::stoi(a));
    else {
      std::fprintf(stderr, "usage: %s [--cli PATH] [--work DIR] [--strict] [criterion...]\n", argv[0]);
      return 2;
    }
  }
  auto want = [&](int c) { return o.only.empty() || o.only.count(c); };

  try {
    if (want(1)) criterion1();
    if (want(2)) criterion2();
    if (want(3)) criterion3();
    if (want(4)) criterion4();
    if (want(5)) criterion5();

    std::optional<Trained> big;
    if (want(6) || want(7)) {
      const RunConfig cfg = default_run_config();
      big = train_all(cfg);
      if (want(6)) criterion6(cfg, *big);
      if (want(7)) criterion7(*big);
      report_equivariance(*big, 60, cfg.dataset.bias_sigma);
    }
    if (want(8)) criterion8();

    if (want(9) || want(10)) {
      const fs::path out = o.work / "run";
      const bool ran = run_cli(o, small_config(o), out, o.work / "run_a.log");
      if (!ran) {
        if (want(9)) verdict(9, false, "pipeline run failed; see " + (o.work / "run_a.log").string());
        if (want(10)) verdict(10, false, "pipeline run failed; see " + (o.work / "run_a.log").string());
      } else {
        if (want(9)) criterion9(out / "report", big ? &*big : nullptr);
        if (want(10)) criterion10(o, out);
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d criteria failed\n", g_failed);
  return o.strict ? g_failed : 0;
}
