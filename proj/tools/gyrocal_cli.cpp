// gyrocal: simulate, analyse, calibrate, build datasets, train and evaluate.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gyrocal/allan.hpp"
#include "gyrocal/calib.hpp"
#include "gyrocal/config.hpp"
#include "gyrocal/dataset.hpp"
#include "gyrocal/errors.hpp"
#include "gyrocal/estimator.hpp"
#include "gyrocal/eval.hpp"
#include "gyrocal/io_util.hpp"
#include "gyrocal/nn/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gyrocal;

namespace {

struct Common {
  std::string config_path;
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  std::optional<int> epochs;
  std::vector<int> k_values;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "run configuration (JSON)");
  cmd->add_option("--scenario", c.scenario, "built-in config when --config is absent: clean or disturbance");
  cmd->add_option("--seed", c.seed, "override the config seed");
  cmd->add_option("-o,--out", c.out, "run directory (overrides output_dir)");
  cmd->add_option("--threads", c.threads, "worker threads, 0 = all");
  cmd->add_option("--epochs", c.epochs, "override train.epochs");
  cmd->add_option("-k,--k", c.k_values, "division factors (default: config k_values)");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config_path.empty()) {
    cfg = load_run_config(c.config_path);
  } else if (c.scenario.empty() || c.scenario == "clean") {
    cfg = default_run_config();
  } else if (c.scenario == "disturbance") {
    cfg = disturbance_run_config();
  } else {
    throw ConfigError("unknown scenario '" + c.scenario + "' (clean, disturbance)");
  }
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (c.threads) cfg.train.threads = *c.threads;
  if (c.epochs) cfg.train.epochs = *c.epochs;
  if (!c.k_values.empty()) cfg.k_values = c.k_values;
  cfg.train.validate();
  return cfg;
}

fs::path signals_dir(const RunConfig& c) { return c.output_dir / "signals"; }
fs::path dataset_dir(const RunConfig& c, int k) { return c.output_dir / "datasets" / ("K" + std::to_string(k)); }
fs::path model_path(const RunConfig& c, int k) { return c.output_dir / "models" / ("K" + std::to_string(k) + ".ckpt"); }
fs::path loss_path(const RunConfig& c, int k) { return c.output_dir / "models" / ("K" + std::to_string(k) + "_loss.csv"); }
fs::path state_path(const RunConfig& c, int k) { return c.output_dir / "models" / ("K" + std::to_string(k) + ".state"); }
fs::path report_dir(const RunConfig& c) { return c.output_dir / "report"; }

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

std::string checkpoint_tag(const std::string& hash, int k) {
  return "config_hash=" + hash + ";k=" + std::to_string(k);
}

KeyValues parse_tag(const std::string& tag) {
  KeyValues kv;
  std::stringstream ss(tag);
  std::string part;
  while (std::getline(ss, part, ';')) {
    const auto eq = part.find('=');
    if (eq != std::string::npos) kv[part.substr(0, eq)] = part.substr(eq + 1);
  }
  return kv;
}

void require_hash(const std::string& what, const std::string& found, const std::string& expected) {
  if (found != expected) {
    throw ConfigError(what + " was produced with config hash " + found + " but this run has " + expected +
                      "; regenerate it with the same config");
  }
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg, bool calibration) {
  const std::string hash = config_hash(cfg);
  const std::string comment = provenance_comment(hash, cfg.seed);
  const fs::path dir = signals_dir(cfg);
  ensure_dir(dir);
  const std::vector<SignalRecord> records = simulate_sources(cfg.simulation, cfg.seed);
  if (records.empty()) std::cerr << "warning: configuration requests zero sources; writing an empty manifest\n";
  json sources = json::array();
  for (const SignalRecord& r : records) {
    const fs::path file = dir / (r.source_id + ".csv");
    save_signal(file, r, {{"config_hash", hash}}, comment);
    sources.push_back({{"id", r.source_id},
                       {"file", file.filename().string()},
                       {"crc32", file_crc32(file)},
                       {"true_bias", json::array({(*r.true_bias)[0], (*r.true_bias)[1], (*r.true_bias)[2]})}});
  }
  const json manifest = {{"format", "gyrocal-signals"}, {"version", 1}, {"config_hash", hash},
                         {"seed", cfg.seed}, {"count", records.size()}, {"sources", sources}};
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_text_file(cfg.output_dir / "config.json", dump_run_config(cfg));
  std::cout << "wrote " << records.size() << " signals to " << dir.string() << "\n";

  if (calibration) {
    const fs::path cdir = cfg.output_dir / "calibration";
    ensure_dir(cdir);
    std::vector<Vec3> rates;
    const auto points = simulate_calibration(cfg.calibration, cfg.simulation.fs, cfg.seed, &rates);
    for (std::size_t i = 0; i < points.size(); ++i) {
      save_signal(cdir / (points[i].source_id + ".csv"), points[i],
                  {{"config_hash", hash}, {"known_rate", format_vec3(rates[i])}}, comment);
    }
    std::cout << "wrote " << points.size() << " calibration points to " << cdir.string() << "\n";
  }
  return 0;
}

std::map<std::string, SignalRecord> load_signals(const RunConfig& cfg, const std::string& hash) {
  const fs::path dir = signals_dir(cfg);
  const fs::path mpath = dir / "manifest.json";
  if (!fs::exists(mpath)) throw IoError("missing " + mpath.string() + "; run `gyrocal simulate` first");
  json manifest;
  try {
    manifest = json::parse(read_text_file(mpath));
  } catch (const json::exception& e) {
    throw FormatError(mpath.string() + ": " + e.what());
  }
  require_hash("signal set " + dir.string(), manifest.value("config_hash", std::string("?")), hash);
  std::map<std::string, SignalRecord> out;
  for (const json& s : manifest.at("sources")) {
    const fs::path file = dir / s.at("file").get<std::string>();
    if (file_crc32(file) != s.at("crc32").get<std::string>()) throw FormatError(file.string() + ": checksum mismatch");
    SignalRecord r = load_signal(file);
    out.emplace(r.source_id, std::move(r));
  }
  return out;
}

// --- allan / residual / calibrate --------------------------------------------

std::pair<std::string, std::uint64_t> provenance_of(const fs::path& signal) {
  std::string hash = "none";
  std::uint64_t seed = 0;
  if (fs::exists(meta_path(signal))) {
    const KeyValues kv = parse_key_values(read_text_file(meta_path(signal)));
    if (auto it = kv.find("config_hash"); it != kv.end()) hash = it->second;
    if (auto it = kv.find("seed"); it != kv.end()) seed = std::stoull(it->second);
  }
  return {hash, seed};
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

int cmd_allan(const std::string& signal, const std::string& out, int ppd) {
  const SignalRecord rec = load_signal(signal);
  const std::vector<double> taus = log_tau_grid(rec.fs, rec.size(), ppd);
  std::vector<AllanCurve> curves;
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) curves.push_back(allan_deviation(rec, a, taus));
  const auto [hash, seed] = provenance_of(signal);
  std::string csv = provenance_comment(hash, seed) + "tau_s,adev_x,adev_y,adev_z,n_clusters\n";
  for (std::size_t i = 0; i < curves[0].taus.size(); ++i) {
    csv += format_double(curves[0].taus[i]);
    for (const AllanCurve& c : curves) csv += "," + format_double(c.sigma[i]);
    csv += "," + std::to_string(curves[0].n_clusters[i]) + "\n";
  }
  write_or_print(out, csv);
  std::ostream& log = (out.empty() || out == "-") ? std::cerr : std::cout;
  const char* names = "xyz";
  for (int a = 0; a < 3; ++a) {
    try {
      const NoiseFit fit = fit_noise_coefficients(curves[static_cast<std::size_t>(a)]);
      log << "axis " << names[a] << ":";
      log << " N=" << (fit.n ? format_double(fit.n->value) : std::string("n/a"));
      log << " B=" << (fit.b ? format_double(fit.b->value) : std::string("n/a"));
      log << " K=" << (fit.k ? format_double(fit.k->value) : std::string("n/a")) << "\n";
    } catch (const InsufficientDataError& e) {
      log << "axis " << names[a] << ": " << e.what() << "\n";
    }
  }
  return 0;
}

int cmd_residual(const std::string& signal, const std::string& out, const std::string& reference) {
  const SignalRecord rec = load_signal(signal);
  std::optional<Vec3> ref;
  if (!reference.empty()) ref = parse_vec3(reference, "--reference");
  const ResidualCurve curve = residual_report(rec, ref);
  const auto [hash, seed] = provenance_of(signal);
  write_or_print(out, provenance_comment(hash, seed) + format_residual_csv(curve));
  return 0;
}

std::string format_params(const CalibrationParams& p, const std::vector<std::string>& unobservable) {
  const auto& names = calibration_param_names();
  const auto x = p.as_vector();
  std::string s;
  for (int i = 0; i < kCalibrationParams; ++i) {
    const bool free = std::find(unobservable.begin(), unobservable.end(), names[static_cast<std::size_t>(i)]) !=
                      unobservable.end();
    s += "  " + names[static_cast<std::size_t>(i)] + " = " + (free ? std::string("unobservable") : format_double(x[i])) + "\n";
  }
  return s;
}

int cmd_calibrate(const std::vector<std::string>& files, const std::string& out) {
  if (files.empty()) throw InvalidParameterError("calibrate needs at least one measurement file");
  std::vector<CalibrationMeasurement> meas;
  std::string hash = "none";
  std::uint64_t seed = 0;
  for (const std::string& f : files) {
    KeyValues kv;
    const SignalRecord rec = load_signal(f, &kv);
    auto it = kv.find("known_rate");
    if (it == kv.end()) throw FormatError(f + ": sidecar has no known_rate entry");
    meas.push_back({parse_vec3(it->second, meta_path(f).string()), make_label(rec), rec.duration});
    if (auto h = kv.find("config_hash"); h != kv.end()) hash = h->second;
    seed = rec.seed;
  }
  std::string report = provenance_comment(hash, seed);
  report += "measurements: " + std::to_string(meas.size()) + "\n";
  const LinearSystem sys = assemble_system(meas);
  try {
    const CalibrationResult r = solve_calibration(sys);
    report += "rank: " + std::to_string(r.rank) + "\n";
    report += "condition: " + format_double(r.condition) + "\n";
    report += "residual_norm: " + format_double(r.residual_norm) + "\n";
    report += "parameters:\n" + format_params(r.params, {});
    if (r.ill_conditioned()) std::cerr << "warning: calibration system is ill-conditioned (condition " << r.condition << ")\n";
  } catch (const CalibrationRankError& e) {
    const CalibrationResult& r = e.partial();
    report += "rank: " + std::to_string(r.rank) + " (deficient)\n";
    report += "residual_norm: " + format_double(r.residual_norm) + "\n";
    report += "parameters:\n" + format_params(r.params, e.unobservable());
    std::cerr << "warning: " << e.what() << "\n";
  }
  write_or_print(out, report);
  return 0;
}

// --- dataset / train / evaluate ------------------------------------------------

int cmd_dataset(const RunConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const auto signals = load_signals(cfg, hash);
  std::vector<SignalRecord> records;
  for (const auto& [_, r] : signals) records.push_back(r);
  for (int k : cfg.k_values) {
    const DatasetOptions opt = dataset_options_for(cfg, k);
    const BuiltDataset built = build_dataset(records, opt);
    const fs::path dir = dataset_dir(cfg, k);
    ensure_dir(dir);
    save_dataset(dir, built, opt, hash);
    std::cout << "K=" << k << ": " << built.dataset.samples.size() << " samples ("
              << built.dataset.indices(Partition::Train).size() << " train, "
              << built.dataset.indices(Partition::Test).size() << " test), T=" << built.dataset.window_seconds
              << " s -> " << dir.string() << "\n";
  }
  return 0;
}

BuiltDataset load_checked_dataset(const RunConfig& cfg, int k, const std::string& hash, const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) {
    throw IoError("missing dataset " + dir.string() + "; run `gyrocal dataset -k " + std::to_string(k) + "` first");
  }
  std::string found;
  BuiltDataset built = load_dataset(dir, &found);
  require_hash("dataset " + dir.string(), found, hash);
  if (built.dataset.k != k) {
    throw ConfigError("dataset " + dir.string() + " has K=" + std::to_string(built.dataset.k) + " but K=" +
                      std::to_string(k) + " was requested");
  }
  (void)cfg;
  return built;
}

int cmd_train(const RunConfig& cfg, const std::string& dataset_override, bool resume, std::optional<int> stop_after) {
  const std::string hash = config_hash(cfg);
  if (!dataset_override.empty() && cfg.k_values.size() != 1) {
    throw InvalidParameterError("--dataset needs exactly one -k value");
  }
  for (int k : cfg.k_values) {
    const fs::path ddir = dataset_override.empty() ? dataset_dir(cfg, k) : fs::path(dataset_override);
    const BuiltDataset built = load_checked_dataset(cfg, k, hash, ddir);
    ensure_dir(model_path(cfg, k).parent_path());
    TrainControl ctl;
    ctl.state_path = state_path(cfg, k);
    if (!resume && fs::exists(*ctl.state_path)) fs::remove(*ctl.state_path);
    ctl.stop_after_epoch = stop_after;
    ctl.on_epoch = [k](int epoch, double tr, double va) {
      std::fprintf(stderr, "K=%d epoch %d train %.5f val %.5f mrad/s\n", k, epoch, tr, va);
    };
    const TrainConfig tc = train_config_for(cfg, k);
    const TrainResult res = train(built.dataset, network_for(cfg, k), tc, ctl);
    std::string csv = provenance_comment(hash, cfg.seed) + "epoch,train_rmse_mrad_s,val_rmse_mrad_s\n";
    for (std::size_t e = 0; e < res.curve.train_rmse.size(); ++e) {
      csv += std::to_string(e + 1) + "," + format_double(res.curve.train_rmse[e]) + "," +
             format_double(res.curve.val_rmse[e]) + "\n";
    }
    write_text_file(loss_path(cfg, k), csv);
    if (stop_after && res.epochs_run < tc.epochs && !res.early_stopped) {
      std::cout << "K=" << k << ": stopped after epoch " << res.epochs_run << "; rerun with --resume to continue\n";
      continue;
    }
    nn::save_checkpoint(model_path(cfg, k), res.model, checkpoint_tag(hash, k));
    std::cout << "K=" << k << ": best epoch " << res.best_epoch << " of " << res.epochs_run << ", val RMSE "
              << format_double(res.curve.val_rmse[static_cast<std::size_t>(res.best_epoch - 1)]) << " mrad/s -> "
              << model_path(cfg, k).string() << "\n";
  }
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  const std::string hash = config_hash(cfg);
  const auto signals = load_signals(cfg, hash);
  std::map<int, BuiltDataset> built;
  std::map<int, nn::Network> models;
  for (int k : cfg.k_values) {
    built.emplace(k, load_checked_dataset(cfg, k, hash, dataset_dir(cfg, k)));
    const fs::path mp = model_path(cfg, k);
    if (!fs::exists(mp)) throw IoError("missing checkpoint " + mp.string() + "; run `gyrocal train -k " + std::to_string(k) + "` first");
    std::string tag;
    nn::Network net = nn::load_checkpoint(mp, &tag);
    const KeyValues kv = parse_tag(tag);
    require_hash("checkpoint " + mp.string(), kv.count("config_hash") ? kv.at("config_hash") : "?", hash);
    if (!kv.count("k") || kv.at("k") != std::to_string(k)) throw ConfigError("checkpoint " + mp.string() + " is not a K=" + std::to_string(k) + " model");
    models.emplace(k, std::move(net));
  }
  // Test sources must agree across K so every row scores the same records.
  std::vector<std::string> test_ids;
  for (const auto& [k, b] : built) {
    std::vector<std::string> ids;
    for (const SourceSummary& s : b.sources) {
      if (s.partition == Partition::Test) ids.push_back(s.id);
    }
    if (test_ids.empty()) test_ids = ids;
    else if (ids != test_ids) std::cerr << "warning: K=" << k << " uses a different test split than the other datasets\n";
  }
  std::vector<SignalRecord> test_records;
  for (const std::string& id : test_ids) {
    auto it = signals.find(id);
    if (it == signals.end()) throw IoError("test source " + id + " is missing from " + signals_dir(cfg).string());
    test_records.push_back(it->second);
  }
  std::map<int, const nn::Network*> mp;
  std::map<int, const LabeledDataset*> dp;
  for (const auto& [k, m] : models) mp[k] = &m;
  for (const auto& [k, b] : built) dp[k] = &b.dataset;
  const EvalResult result = evaluate(mp, dp, test_records, cfg.train.threads);

  const fs::path rdir = report_dir(cfg);
  ensure_dir(rdir);
  const std::string comment = provenance_comment(hash, cfg.seed);
  const std::string table = format_table(result);
  write_text_file(rdir / "table.txt", comment + table);
  write_text_file(rdir / "table.csv", comment + format_table_csv(result));
  if (!test_records.empty()) {
    const SignalRecord& r = test_records.front();
    write_text_file(rdir / "bias_error_vs_time.csv", comment + "# source=" + r.source_id + "\n" +
                                                      format_model_vs_time_csv(r, make_label(r), mp));
    write_text_file(rdir / "residual.csv", comment + "# source=" + r.source_id + "\n" +
                                               format_residual_csv(residual_report(r)));
  }
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gyro noise analysis, calibration and bias estimation"};
  app.require_subcommand(1);

  Common sim_c, ds_c, tr_c, ev_c, run_c, cfg_c;
  bool with_calibration = false;
  auto* sim = app.add_subcommand("simulate", "write synthetic stationary records (and calibration points)");
  add_common(sim, sim_c);
  sim->add_flag("--calibration", with_calibration, "also write the six-point calibration records");

  std::string allan_in, allan_out;
  int ppd = 20;
  auto* allan = app.add_subcommand("allan", "overlapping Allan deviation of a signal CSV");
  allan->add_option("signal", allan_in, "signal CSV")->required();
  allan->add_option("-o,--out", allan_out, "output CSV (default stdout)");
  allan->add_option("--points-per-decade", ppd, "tau grid density");

  std::string res_in, res_out, res_ref;
  auto* residual = app.add_subcommand("residual", "cumulative-mean residual and its moving std");
  residual->add_option("signal", res_in, "signal CSV")->required();
  residual->add_option("-o,--out", res_out, "output CSV (default stdout)");
  residual->add_option("--reference", res_ref, "reference bias x,y,z [rad/s] (default: sidecar true_bias)");

  std::vector<std::string> cal_in;
  std::string cal_out;
  auto* calibrate = app.add_subcommand("calibrate", "least-squares scale factor, misalignment and bias");
  calibrate->add_option("measurements", cal_in, "signal CSVs whose sidecars carry known_rate");
  calibrate->add_option("-o,--out", cal_out, "report file (default stdout)");

  auto* dataset = app.add_subcommand("dataset", "truncate, label, augment and split the simulated records");
  add_common(dataset, ds_c);

  std::string train_dataset;
  bool resume = false;
  std::optional<int> stop_after;
  auto* train_cmd = app.add_subcommand("train", "train one model per K");
  add_common(train_cmd, tr_c);
  train_cmd->add_option("--dataset", train_dataset, "dataset directory (with a single -k)");
  train_cmd->add_flag("--resume", resume, "continue from the saved per-epoch state");
  train_cmd->add_option("--stop-after", stop_after, "stop after this many epochs (resumable)");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "per-K comparison table and bias-error curves");
  add_common(evaluate_cmd, ev_c);

  auto* run = app.add_subcommand("run", "simulate, dataset, train and evaluate in one go");
  add_common(run, run_c);

  auto* config = app.add_subcommand("config", "print the effective configuration");
  add_common(config, cfg_c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) return cmd_simulate(resolve(sim_c), with_calibration);
    if (*allan) return cmd_allan(allan_in, allan_out, ppd);
    if (*residual) return cmd_residual(res_in, res_out, res_ref);
    if (*calibrate) return cmd_calibrate(cal_in, cal_out);
    if (*dataset) return cmd_dataset(resolve(ds_c));
    if (*train_cmd) return cmd_train(resolve(tr_c), train_dataset, resume, stop_after);
    if (*evaluate_cmd) return cmd_evaluate(resolve(ev_c));
    if (*run) {
      const RunConfig cfg = resolve(run_c);
      cmd_simulate(cfg, false);
      cmd_dataset(cfg);
      cmd_train(cfg, {}, false, std::nullopt);
      return cmd_evaluate(cfg);
    }
    if (*config) {
      const RunConfig cfg = resolve(cfg_c);
      std::cout << dump_run_config(cfg);
      std::cerr << "config_hash=" << config_hash(cfg) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
