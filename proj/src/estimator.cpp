#include "gyrocal/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "gyrocal/errors.hpp"
#include "gyrocal/io_util.hpp"
#include "gyrocal/nn/checkpoint.hpp"
#include "gyrocal/random.hpp"

namespace gyrocal {

namespace {

constexpr char kStateMagic[4] = {'G', 'Y', 'R', 'S'};
constexpr std::uint32_t kStateVersion = 2;

int stage_after(int len, int kernel, int stride) { return len < kernel ? 0 : (len - kernel) / stride + 1; }

struct TrainState {
  int epoch = 0;
  std::vector<double> params;
  std::vector<double> best_params;
  std::vector<double> average;  // empty unless weight averaging is on
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int since_best = 0;
  nn::OptimizerState opt;
  LossCurve curve;
};

std::uint32_t config_fingerprint(const BiasNetSpec& s, const TrainConfig& c, std::size_t n_params) {
  nn::ByteWriter w;
  for (int v : {s.input_length, s.conv1_channels, s.conv1_kernel, s.conv1_stride, s.pool1,
                s.conv2_channels, s.conv2_kernel, s.conv2_stride, s.pool2, s.hidden,
                c.batch_size, c.patience, c.threads}) {
    w.put(v);
  }
  w.put(c.learning_rate);
  w.put(c.seed);
  w.put(c.validation_fraction);
  w.put(c.lr_final_scale);
  w.put(c.epochs);
  w.put(c.bias_lr_scale);
  w.put(c.weight_average);
  w.put(static_cast<std::uint64_t>(n_params));
  return crc32(w.bytes());
}

void save_state(const std::filesystem::path& path, const TrainState& st, std::uint32_t fingerprint) {
  nn::ByteWriter w;
  w.put_bytes(std::string_view(kStateMagic, 4));
  w.put(kStateVersion);
  w.put(fingerprint);
  w.put(static_cast<std::int32_t>(st.epoch));
  w.put(static_cast<std::uint64_t>(st.params.size()));
  w.put_doubles(st.params);
  w.put_doubles(st.best_params);
  w.put(static_cast<std::uint64_t>(st.average.size()));
  w.put_doubles(st.average);
  w.put(st.best_val);
  w.put(static_cast<std::int32_t>(st.best_epoch));
  w.put(static_cast<std::int32_t>(st.since_best));
  w.put(st.opt.step);
  w.put(st.opt.hp.learning_rate);
  w.put_doubles(st.opt.m);
  w.put_doubles(st.opt.v);
  w.put(static_cast<std::uint64_t>(st.curve.train_rmse.size()));
  w.put_doubles(st.curve.train_rmse);
  w.put_doubles(st.curve.val_rmse);
  w.put(crc32(w.bytes()));
  // Write-then-rename so an interruption never leaves a torn state file.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_text_file(tmp, w.bytes());
  std::filesystem::rename(tmp, path);
}

TrainState load_state(const std::filesystem::path& path, std::uint32_t fingerprint, const TrainState& fresh) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < 12 || bytes.compare(0, 4, kStateMagic, 4) != 0) throw FormatError(path.string() + ": not a training state file");
  const std::string_view body(bytes.data(), bytes.size() - 4);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (crc32(body) != stored) throw FormatError(path.string() + ": checksum mismatch");
  nn::ByteReader r(body);
  r.get_bytes(4);
  if (r.get<std::uint32_t>() != kStateVersion) throw FormatError(path.string() + ": unsupported version");
  if (r.get<std::uint32_t>() != fingerprint) {
    throw ConfigError(path.string() + " was written by a different model or training configuration");
  }
  TrainState st = fresh;
  st.epoch = r.get<std::int32_t>();
  const auto n = r.get<std::uint64_t>();
  if (n != st.params.size()) throw FormatError(path.string() + ": parameter count mismatch");
  r.get_doubles(st.params);
  r.get_doubles(st.best_params);
  if (r.get<std::uint64_t>() != st.average.size()) throw FormatError(path.string() + ": averaged parameter count mismatch");
  r.get_doubles(st.average);
  st.best_val = r.get<double>();
  st.best_epoch = r.get<std::int32_t>();
  st.since_best = r.get<std::int32_t>();
  st.opt.step = r.get<std::uint64_t>();
  st.opt.hp.learning_rate = r.get<double>();
  r.get_doubles(st.opt.m);
  r.get_doubles(st.opt.v);
  const auto epochs = r.get<std::uint64_t>();
  st.curve.train_rmse.resize(epochs);
  st.curve.val_rmse.resize(epochs);
  r.get_doubles(st.curve.train_rmse);
  r.get_doubles(st.curve.val_rmse);
  return st;
}

double rmse_mrad(const nn::Network& net, const LabeledDataset& ds, std::span<const std::size_t> idx, int threads) {
  std::vector<const Window*> windows;
  windows.reserve(idx.size());
  for (std::size_t i : idx) windows.push_back(&ds.samples[i].window);
  const std::vector<Vec3> pred = predict_all(net, windows, threads);
  double acc = 0.0;
  for (std::size_t j = 0; j < idx.size(); ++j) acc += (pred[j] - ds.samples[idx[j]].label).squaredNorm();
  return 1e3 * std::sqrt(acc / (3.0 * static_cast<double>(idx.size())));
}

}  // namespace

int BiasNetSpec::min_input_length() const {
  for (int len = 1;; ++len) {
    int l = stage_after(len, conv1_kernel, conv1_stride);
    l = stage_after(l, pool1, pool1);
    l = stage_after(l, conv2_kernel, conv2_stride);
    l = stage_after(l, pool2, pool2);
    if (l >= 1) return len;
  }
}

std::vector<nn::LayerSpec> BiasNetSpec::layers() const {
  if (input_length < min_input_length()) {
    throw DimensionError("BiasNet input length " + std::to_string(input_length) + " is below the minimum " +
                         std::to_string(min_input_length()));
  }
  int l = stage_after(input_length, conv1_kernel, conv1_stride);
  l = stage_after(l, pool1, pool1);
  l = stage_after(l, conv2_kernel, conv2_stride);
  l = stage_after(l, pool2, pool2);
  return {
      nn::LayerSpec::conv(3, conv1_channels, conv1_kernel, conv1_stride),
      nn::LayerSpec::relu(),
      nn::LayerSpec::pool(pool1, pool1),
      nn::LayerSpec::conv(conv1_channels, conv2_channels, conv2_kernel, conv2_stride),
      nn::LayerSpec::relu(),
      nn::LayerSpec::pool(pool2, pool2),
      nn::LayerSpec::dense(conv2_channels * l, hidden),
      nn::LayerSpec::relu(),
      nn::LayerSpec::dense(hidden, 3),
  };
}

nn::Network BiasNetSpec::build(std::uint64_t seed) const {
  nn::Network net(nn::Shape{3, input_length}, layers());
  net.initialize(seed);
  return net;
}

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || patience < 1 || threads < 0 || !(learning_rate > 0.0)) {
    throw ConfigError("training epochs, batch size, patience and learning rate must be positive");
  }
  if (!(validation_fraction > 0.0 && validation_fraction <= 0.5)) {
    throw ConfigError("validation fraction must be in (0, 0.5]");
  }
  if (!(lr_final_scale > 0.0 && lr_final_scale <= 1.0)) throw ConfigError("lr_final_scale must be in (0, 1]");
  if (!(bias_lr_scale > 0.0)) throw ConfigError("bias_lr_scale must be positive");
  if (!(weight_average >= 0.0 && weight_average < 1.0)) throw ConfigError("weight_average must be in [0, 1)");
}

Vec3 baseline_bias(const Window& window) {
  if (window.length() == 0) throw InsufficientDataError("baseline_bias: empty window");
  Vec3 out;
  for (int a = 0; a < 3; ++a) {
    const auto row = window.axis(a);
    out[a] = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(row.size());
  }
  return out;
}

Window running_mean_curve(const SignalRecord& record) {
  if (record.size() == 0) throw InsufficientDataError("running_mean_curve: empty record");
  Window out(record.size());
  for (int a = 0; a < 3; ++a) {
    double sum = 0.0;
    for (std::size_t t = 0; t < record.size(); ++t) {
      sum += record.samples[t][a];
      out(a, t) = sum / static_cast<double>(t + 1);
    }
  }
  return out;
}

Vec3 predict(const nn::Network& model, const Window& window) {
  if (static_cast<int>(window.length()) != model.input_shape().length) {
    throw DimensionError("predict: window length " + std::to_string(window.length()) +
                         " does not match the model input length " +
                         std::to_string(model.input_shape().length));
  }
  nn::Network::Workspace ws = model.make_workspace();
  const auto out = model.forward(window.values(), ws);
  return {out[0], out[1], out[2]};
}

std::vector<Vec3> predict_all(const nn::Network& model, std::span<const Window* const> windows, int threads) {
  const int nt = nn::resolve_threads(threads);
  const auto n = static_cast<std::ptrdiff_t>(windows.size());
  for (const Window* w : windows) {
    if (static_cast<int>(w->length()) != model.input_shape().length) {
      throw DimensionError("predict: window length " + std::to_string(w->length()) +
                           " does not match the model input length " +
                           std::to_string(model.input_shape().length));
    }
  }
  std::vector<Vec3> out(windows.size());
#pragma omp parallel num_threads(nt)
  {
    nn::Network::Workspace ws = model.make_workspace();
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto y = model.forward(windows[static_cast<std::size_t>(i)]->values(), ws);
      out[static_cast<std::size_t>(i)] = Vec3(y[0], y[1], y[2]);
    }
  }
  return out;
}

TrainResult train(const LabeledDataset& dataset, const BiasNetSpec& spec, const TrainConfig& config,
                  const TrainControl& control) {
  config.validate();
  if (static_cast<int>(dataset.window_length()) != spec.input_length) {
    throw ConfigError("dataset windows have length " + std::to_string(dataset.window_length()) +
                      " but the model expects " + std::to_string(spec.input_length));
  }
  const LabeledDataset ds = carve_validation(dataset, config.validation_fraction, config.seed);
  const std::vector<std::size_t> train_idx = ds.indices(Partition::Train);
  const std::vector<std::size_t> val_idx = ds.indices(Partition::Validation);
  if (train_idx.empty()) throw ConfigError("train split is empty");

  nn::Network net = spec.build(derive_seed(config.seed, {0x1417u}));
  const std::uint32_t fingerprint = config_fingerprint(spec, config, net.parameter_count());

  TrainState st;
  st.params.assign(net.params().begin(), net.params().end());
  st.best_params = st.params;
  if (config.weight_average > 0.0) st.average = st.params;
  st.opt = nn::make_optimizer(net.parameter_count(), nn::AdamConfig{config.learning_rate});
  if (control.state_path && std::filesystem::exists(*control.state_path)) {
    st = load_state(*control.state_path, fingerprint, st);
  }
  std::copy(st.params.begin(), st.params.end(), net.params().begin());

  std::vector<double> lr_scale;
  if (config.bias_lr_scale != 1.0) {
    lr_scale.assign(net.parameter_count(), 1.0);
    for (std::size_t l = 0; l < net.layers().size(); ++l) {
      const std::size_t off = net.bias_offset(l);
      for (std::size_t i = 0; i < net.bias_count(l); ++i) lr_scale[off + i] = config.bias_lr_scale;
    }
  }

  nn::BatchGradient engine(net, config.threads);
  std::vector<double> grad(net.parameter_count());
  std::vector<const double*> inputs;
  std::vector<double> targets;
  std::vector<std::size_t> order = train_idx;
  const auto batch = static_cast<std::size_t>(config.batch_size);

  bool early = st.since_best >= config.patience;
  while (!early && st.epoch < config.epochs) {
    if (control.stop_after_epoch && st.epoch >= *control.stop_after_epoch) break;
    const int epoch = st.epoch + 1;
    const double progress = config.epochs > 1 ? static_cast<double>(epoch - 1) / (config.epochs - 1) : 0.0;
    st.opt.hp.learning_rate = config.learning_rate * std::pow(config.lr_final_scale, progress);

    order = train_idx;
    Rng rng(derive_seed(config.seed, {0xe90cu, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(order.begin(), order.end(), rng);

    double sq_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      inputs.clear();
      targets.clear();
      for (std::size_t j = start; j < end; ++j) {
        const LabeledSample& s = ds.samples[order[j]];
        inputs.push_back(s.window.values().data());
        targets.insert(targets.end(), {s.label[0], s.label[1], s.label[2]});
      }
      const double loss = engine.compute(net, inputs, targets, grad);
      if (!std::isfinite(loss)) throw NumericalError("training loss became non-finite at epoch " + std::to_string(epoch));
      sq_sum += loss * static_cast<double>(end - start);
      nn::optimizer_step(net.params(), grad, st.opt, lr_scale);
      if (!st.average.empty()) {
        // Short memory for the first steps so the average does not drag the init along.
        const double t = static_cast<double>(st.opt.step);
        const double d = std::min(config.weight_average, (1.0 + t) / (10.0 + t));
        const auto p = net.params();
        for (std::size_t i = 0; i < p.size(); ++i) st.average[i] = d * st.average[i] + (1.0 - d) * p[i];
      }
    }
    const double train_rmse = 1e3 * std::sqrt(sq_sum / static_cast<double>(order.size()));
    st.params.assign(net.params().begin(), net.params().end());
    if (!st.average.empty()) std::copy(st.average.begin(), st.average.end(), net.params().begin());
    const double val_rmse = val_idx.empty() ? train_rmse : rmse_mrad(net, ds, val_idx, config.threads);
    std::copy(st.params.begin(), st.params.end(), net.params().begin());

    st.epoch = epoch;
    st.curve.train_rmse.push_back(train_rmse);
    st.curve.val_rmse.push_back(val_rmse);
    if (val_rmse < st.best_val) {
      st.best_val = val_rmse;
      st.best_epoch = epoch;
      st.best_params = st.average.empty() ? st.params : st.average;
      st.since_best = 0;
    } else {
      ++st.since_best;
    }
    if (control.state_path) save_state(*control.state_path, st, fingerprint);
    if (control.on_epoch) control.on_epoch(epoch, train_rmse, val_rmse);
    if (st.since_best >= config.patience) {
      early = true;
      break;
    }
  }

  std::copy(st.best_params.begin(), st.best_params.end(), net.params().begin());
  return TrainResult{std::move(net), st.curve, st.best_epoch, st.epoch, early};
}

}  // namespace gyrocal
