#include "gyrocal/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include <json.hpp>

#include "gyrocal/calib.hpp"
#include "gyrocal/errors.hpp"
#include "gyrocal/io_util.hpp"
#include "gyrocal/random.hpp"

namespace gyrocal {

using nlohmann::json;

namespace {

json vec3_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec3_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(key + " must be an array of 3 numbers");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json noise_json(const NoiseCoefficients& n) {
  return {{"q", n.q}, {"n", n.n}, {"b_inst", n.b_inst}, {"b_corr_time", n.b_corr_time}, {"k", n.k}, {"r", n.r}};
}

json disturbance_json(const DisturbanceSpec& d) {
  json j{{"kind", std::string(to_string(d.kind))},
         {"amplitude", d.amplitude},
         {"frequency_hz", d.frequency_hz},
         {"frequency_max_hz", d.frequency_max_hz},
         {"spike_rate", d.spike_rate},
         {"spike_magnitude", d.spike_magnitude}};
  j["phase"] = d.phase ? json(*d.phase) : json(nullptr);
  return j;
}

// Reads keys of `j` into the fields named in `setters`; unknown keys are errors.
template <class F>
void read_object(const json& j, const std::string& where, const std::set<std::string>& allowed, F&& apply) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + where + "." + it.key() + "'");
    apply(it.key(), it.value());
  }
}

NoiseCoefficients noise_from(const json& j, const std::string& where) {
  NoiseCoefficients n;
  read_object(j, where, {"q", "n", "b_inst", "b_corr_time", "k", "r"}, [&](const std::string& k, const json& v) {
    const double x = v.get<double>();
    if (k == "q") n.q = x;
    else if (k == "n") n.n = x;
    else if (k == "b_inst") n.b_inst = x;
    else if (k == "b_corr_time") n.b_corr_time = x;
    else if (k == "k") n.k = x;
    else n.r = x;
  });
  return n;
}

DisturbanceSpec disturbance_from(const json& j, const std::string& where) {
  DisturbanceSpec d;
  read_object(j, where, {"kind", "amplitude", "frequency_hz", "frequency_max_hz", "spike_rate", "spike_magnitude", "phase"},
              [&](const std::string& k, const json& v) {
                if (k == "kind") d.kind = parse_disturbance_kind(v.get<std::string>());
                else if (k == "amplitude") d.amplitude = v.get<double>();
                else if (k == "frequency_hz") d.frequency_hz = v.get<double>();
                else if (k == "frequency_max_hz") d.frequency_max_hz = v.get<double>();
                else if (k == "spike_rate") d.spike_rate = v.get<double>();
                else if (k == "spike_magnitude") d.spike_magnitude = v.get<double>();
                else if (v.is_null()) d.phase.reset();
                else d.phase = v.get<double>();
              });
  return d;
}

json to_json(const RunConfig& c) {
  json sensors = json::array();
  for (const SensorProfile& s : c.simulation.sensors) {
    sensors.push_back({{"name", s.name}, {"noise", noise_json(s.noise)}, {"bias_range", s.bias_range},
                       {"repeatability", s.repeatability}});
  }
  const DatasetOptions& d = c.dataset;
  const BiasNetSpec& n = c.network;
  const TrainConfig& t = c.train;
  const CalibrationConfig& cal = c.calibration;
  json ma = json::array();
  for (double v : cal.misalignment) ma.push_back(v);
  json epoch_caps = json::object();
  for (const auto& [k, e] : c.epochs_per_k) epoch_caps[std::to_string(k)] = e;
  return {
      {"scenario", c.scenario},
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"simulation",
       {{"fs", c.simulation.fs},
        {"duration", c.simulation.duration},
        {"records_per_sensor", c.simulation.records_per_sensor},
        {"sensors", sensors},
        {"disturbance", disturbance_json(c.simulation.disturbance)}}},
      {"k_values", c.k_values},
      {"dataset",
       {{"n_copies", d.n_copies},
        {"bias_sigma", d.bias_sigma},
        {"noise_sigma", d.noise_sigma ? json(*d.noise_sigma) : json(nullptr)},
        {"disturbance", disturbance_json(d.disturbance)},
        {"all_windows", d.all_windows},
        {"split_ratio", d.split_ratio}}},
      {"network",
       {{"conv1_channels", n.conv1_channels},
        {"conv1_kernel", n.conv1_kernel},
        {"conv1_stride", n.conv1_stride},
        {"pool1", n.pool1},
        {"conv2_channels", n.conv2_channels},
        {"conv2_kernel", n.conv2_kernel},
        {"conv2_stride", n.conv2_stride},
        {"pool2", n.pool2},
        {"hidden", n.hidden}}},
      {"train",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"patience", t.patience},
        {"validation_fraction", t.validation_fraction},
        {"threads", t.threads},
        {"lr_final_scale", t.lr_final_scale},
        {"bias_lr_scale", t.bias_lr_scale},
        {"weight_average", t.weight_average},
        {"epochs_per_k", epoch_caps}}},
      {"calibration",
       {{"rate_magnitude", cal.rate_magnitude},
        {"averaging_time", cal.averaging_time},
        {"scale_factor", vec3_json(cal.scale_factor)},
        {"misalignment", ma},
        {"bias", vec3_json(cal.bias)},
        {"noise", noise_json(cal.noise)}}},
  };
}

}  // namespace

std::vector<SensorProfile> default_sensor_profiles(double fs) {
  // Per-sample white-noise sigma [rad/s] of each phone.
  const double sigmas[] = {1.5e-3, 2.0e-3, 2.5e-3, 3.0e-3, 1.8e-3};
  std::vector<SensorProfile> out;
  for (int i = 0; i < 5; ++i) {
    SensorProfile p;
    p.name = "phone" + std::to_string(i + 1);
    p.noise.n = sigmas[i] / std::sqrt(fs);
    p.noise.q = 2e-4;
    p.noise.b_inst = 2e-5;
    p.noise.b_corr_time = 100.0;
    p.noise.k = 1e-7;
    out.push_back(p);
  }
  return out;
}

RunConfig default_run_config() {
  RunConfig c;
  c.simulation.sensors = default_sensor_profiles(c.simulation.fs);
  c.calibration.noise = c.simulation.sensors.front().noise;
  // About 9 minutes of single-core training over the four default K.
  c.epochs_per_k = {{20, 120}, {10, 65}, {6, 50}};
  return c;
}

RunConfig disturbance_run_config() {
  RunConfig c = default_run_config();
  c.scenario = "disturbance";
  const double sigma = 2e-3;
  for (SensorProfile& p : c.simulation.sensors) p.noise.n = sigma / std::sqrt(c.simulation.fs);
  c.dataset.disturbance.kind = DisturbanceSpec::Kind::Sinusoid;
  c.dataset.disturbance.amplitude = 5.0 * sigma;
  c.dataset.disturbance.frequency_hz = 5.0;
  c.dataset.disturbance.frequency_max_hz = 20.0;
  return c;
}

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig c = default_run_config();
  try {
    read_object(j, "config", {"scenario", "seed", "output_dir", "simulation", "k_values", "dataset", "network", "train", "calibration"},
                [&](const std::string& k, const json& v) {
      if (k == "scenario") c.scenario = v.get<std::string>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "output_dir") c.output_dir = v.get<std::string>();
      else if (k == "k_values") c.k_values = v.get<std::vector<int>>();
      else if (k == "simulation") {
        read_object(v, "simulation", {"fs", "duration", "records_per_sensor", "sensors", "disturbance"},
                    [&](const std::string& sk, const json& sv) {
          SimulationConfig& s = c.simulation;
          if (sk == "fs") s.fs = sv.get<double>();
          else if (sk == "duration") s.duration = sv.get<double>();
          else if (sk == "records_per_sensor") s.records_per_sensor = sv.get<int>();
          else if (sk == "disturbance") s.disturbance = disturbance_from(sv, "simulation.disturbance");
          else {
            if (!sv.is_array()) throw ConfigError("simulation.sensors must be an array");
            s.sensors.clear();
            for (const json& e : sv) {
              SensorProfile p;
              read_object(e, "simulation.sensors[]", {"name", "noise", "bias_range", "repeatability"},
                          [&](const std::string& pk, const json& pv) {
                if (pk == "name") p.name = pv.get<std::string>();
                else if (pk == "noise") p.noise = noise_from(pv, "simulation.sensors[].noise");
                else if (pk == "bias_range") p.bias_range = pv.get<double>();
                else p.repeatability = pv.get<double>();
              });
              s.sensors.push_back(p);
            }
          }
        });
      } else if (k == "dataset") {
        read_object(v, "dataset", {"n_copies", "bias_sigma", "noise_sigma", "disturbance", "all_windows", "split_ratio"},
                    [&](const std::string& dk, const json& dv) {
          DatasetOptions& d = c.dataset;
          if (dk == "n_copies") d.n_copies = dv.get<int>();
          else if (dk == "bias_sigma") d.bias_sigma = dv.get<double>();
          else if (dk == "noise_sigma") d.noise_sigma = dv.is_null() ? std::nullopt : std::optional<double>(dv.get<double>());
          else if (dk == "disturbance") d.disturbance = disturbance_from(dv, "dataset.disturbance");
          else if (dk == "all_windows") d.all_windows = dv.get<bool>();
          else d.split_ratio = dv.get<double>();
        });
      } else if (k == "network") {
        read_object(v, "network", {"conv1_channels", "conv1_kernel", "conv1_stride", "pool1", "conv2_channels",
                                   "conv2_kernel", "conv2_stride", "pool2", "hidden"},
                    [&](const std::string& nk, const json& nv) {
          BiasNetSpec& n = c.network;
          const int x = nv.get<int>();
          if (nk == "conv1_channels") n.conv1_channels = x;
          else if (nk == "conv1_kernel") n.conv1_kernel = x;
          else if (nk == "conv1_stride") n.conv1_stride = x;
          else if (nk == "pool1") n.pool1 = x;
          else if (nk == "conv2_channels") n.conv2_channels = x;
          else if (nk == "conv2_kernel") n.conv2_kernel = x;
          else if (nk == "conv2_stride") n.conv2_stride = x;
          else if (nk == "pool2") n.pool2 = x;
          else n.hidden = x;
        });
      } else if (k == "train") {
        read_object(v, "train", {"epochs", "batch_size", "learning_rate", "patience", "validation_fraction", "threads", "lr_final_scale", "bias_lr_scale", "weight_average", "epochs_per_k"},
                    [&](const std::string& tk, const json& tv) {
          TrainConfig& t = c.train;
          if (tk == "epochs") t.epochs = tv.get<int>();
          else if (tk == "batch_size") t.batch_size = tv.get<int>();
          else if (tk == "learning_rate") t.learning_rate = tv.get<double>();
          else if (tk == "patience") t.patience = tv.get<int>();
          else if (tk == "validation_fraction") t.validation_fraction = tv.get<double>();
          else if (tk == "threads") t.threads = tv.get<int>();
          else if (tk == "lr_final_scale") t.lr_final_scale = tv.get<double>();
          else if (tk == "bias_lr_scale") t.bias_lr_scale = tv.get<double>();
          else if (tk == "weight_average") t.weight_average = tv.get<double>();
          else {
            if (!tv.is_object()) throw ConfigError("train.epochs_per_k must be an object of K -> epochs");
            c.epochs_per_k.clear();
            for (const auto& [ks, ev] : tv.items()) {
              int kk = 0;
              const auto [ptr, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), kk);
              if (ec != std::errc{} || ptr != ks.data() + ks.size()) throw ConfigError("train.epochs_per_k key '" + ks + "' is not an integer");
              if (ev.get<int>() < 1) throw ConfigError("train.epochs_per_k values must be >= 1");
              c.epochs_per_k[kk] = ev.get<int>();
            }
          }
        });
      } else {
        read_object(v, "calibration", {"rate_magnitude", "averaging_time", "scale_factor", "misalignment", "bias", "noise"},
                    [&](const std::string& ck, const json& cv) {
          CalibrationConfig& cal = c.calibration;
          if (ck == "rate_magnitude") cal.rate_magnitude = cv.get<double>();
          else if (ck == "averaging_time") cal.averaging_time = cv.get<double>();
          else if (ck == "scale_factor") cal.scale_factor = vec3_from(cv, "calibration.scale_factor");
          else if (ck == "bias") cal.bias = vec3_from(cv, "calibration.bias");
          else if (ck == "noise") cal.noise = noise_from(cv, "calibration.noise");
          else {
            if (!cv.is_array() || cv.size() != 6) throw ConfigError("calibration.misalignment must have 6 entries");
            for (std::size_t i = 0; i < 6; ++i) cal.misalignment[i] = cv[i].get<double>();
          }
        });
      }
    });
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config has a wrongly typed value: ") + e.what());
  } catch (const Error& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(e.what());
  }
  if (c.k_values.empty()) throw ConfigError("k_values must not be empty");
  for (int k : c.k_values) {
    if (k < 1) throw ConfigError("k_values entries must be >= 1");
  }
  if (c.simulation.records_per_sensor < 0) throw ConfigError("records_per_sensor must be >= 0");
  if (c.dataset.n_copies < 0 || c.dataset.bias_sigma < 0.0) throw ConfigError("dataset sigmas and copy count must be >= 0");
  c.train.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path));
}

std::string dump_run_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const RunConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  return hex32(crc32(j.dump()));
}

DatasetOptions dataset_options_for(const RunConfig& config, int k) {
  DatasetOptions o = config.dataset;
  o.k = k;
  o.seed = derive_seed(config.seed, {0xda7au, static_cast<std::uint64_t>(k)});
  // Same test sources for every K.
  o.split_seed = derive_seed(config.seed, {0x5b1du});
  return o;
}

TrainConfig train_config_for(const RunConfig& config, int k) {
  TrainConfig t = config.train;
  if (auto it = config.epochs_per_k.find(k); it != config.epochs_per_k.end()) t.epochs = std::min(t.epochs, it->second);
  return t;
}

BiasNetSpec network_for(const RunConfig& config, int k) {
  BiasNetSpec s = config.network;
  const std::size_t n = sample_count(config.simulation.duration, config.simulation.fs);
  if (n % static_cast<std::size_t>(k) != 0) {
    throw PartitionError("K=" + std::to_string(k) + " does not divide " + std::to_string(n) + " samples");
  }
  s.input_length = static_cast<int>(n / static_cast<std::size_t>(k));
  return s;
}

std::vector<SignalRecord> simulate_sources(const SimulationConfig& sim, std::uint64_t seed) {
  std::vector<SignalRecord> out;
  for (std::size_t s = 0; s < sim.sensors.size(); ++s) {
    const SensorProfile& p = sim.sensors[s];
    Rng rng(derive_seed(seed, {0x5e45u, s}));
    std::uniform_real_distribution<double> base(-p.bias_range, p.bias_range);
    std::normal_distribution<double> rep(0.0, 1.0);
    const Vec3 sensor_bias(base(rng), base(rng), base(rng));
    for (int r = 0; r < sim.records_per_sensor; ++r) {
      ErrorModelParams params;
      params.noise = p.noise;
      params.bias = sensor_bias;
      for (int a = 0; a < 3; ++a) params.bias[a] += p.repeatability * rep(rng);
      const std::string id = (p.name.empty() ? "sensor" + std::to_string(s + 1) : p.name) + "_rec" +
                             std::to_string(r + 1);
      out.push_back(synthesize_stationary(params, sim.disturbance, sim.duration, sim.fs,
                                          derive_seed(seed, {0x5ec0u, s, static_cast<std::uint64_t>(r)}), id));
    }
  }
  return out;
}

std::vector<SignalRecord> simulate_calibration(const CalibrationConfig& cal, double fs, std::uint64_t seed,
                                               std::vector<Vec3>* known_rates) {
  ErrorModelParams params;
  params.distortion = compose_distortion(cal.scale_factor, cal.misalignment);
  params.bias = cal.bias;
  params.noise = cal.noise;
  const std::vector<Vec3> rates = six_point_protocol(cal.rate_magnitude);
  std::vector<SignalRecord> out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    out.push_back(synthesize_constant_rate(params, rates[i], {}, cal.averaging_time, fs,
                                           derive_seed(seed, {0xca1u, i}), "cal_point" + std::to_string(i + 1)));
  }
  if (known_rates) *known_rates = rates;
  return out;
}

}  // namespace gyrocal
