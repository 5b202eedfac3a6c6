#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "gyrocal/config.hpp"
#include "gyrocal/errors.hpp"
#include "gyrocal/eval.hpp"

using namespace gyrocal;
namespace fs = std::filesystem;

namespace {

SignalRecord constant_record(const Vec3& b, std::size_t n, const std::string& id = "r") {
  SignalRecord r;
  r.fs = 200.0;
  r.duration = static_cast<double>(n) / r.fs;
  r.samples.assign(n, b);
  r.true_bias = b;
  r.source_id = id;
  return r;
}

RunConfig small_config() {
  RunConfig c = default_run_config();
  c.simulation.records_per_sensor = 2;
  c.dataset.n_copies = 10;
  c.k_values = {60};
  c.train.epochs = 3;
  return c;
}

}  // namespace

TEST_CASE("window mean baseline") {
  Window w(4);
  const double vals[3][4] = {{1, 2, 3, 4}, {-1, -1, -1, -1}, {0, 0, 0, 8}};
  for (int a = 0; a < 3; ++a)
    for (std::size_t t = 0; t < 4; ++t) w(a, t) = vals[a][t];
  CHECK(baseline_bias(w) == Vec3(2.5, -1.0, 2.0));
  CHECK_THROWS_AS(baseline_bias(Window{}), InsufficientDataError);
}

TEST_CASE("running mean curve") {
  SignalRecord r = constant_record(Vec3(1, 2, 3), 5);
  r.samples[1] = Vec3(3, 2, 1);
  const Window c = running_mean_curve(r);
  CHECK(c(0, 0) == 1.0);
  CHECK(c(0, 1) == 2.0);
  CHECK(c(2, 1) == 2.0);
  CHECK(c(0, 4) == doctest::Approx(7.0 / 5.0));
  CHECK_THROWS_AS(running_mean_curve(SignalRecord{}), InsufficientDataError);

  ErrorModelParams p;
  p.bias = Vec3(0.01, 0.0, -0.01);
  p.noise.n = 2e-3 / std::sqrt(200.0);
  double ss = 0.0;
  int n = 0;
  for (std::uint64_t s = 0; s < 60; ++s) {
    const Window m = running_mean_curve(synthesize_stationary(p, {}, 10.0, 200.0, s));
    for (int a = 0; a < 3; ++a, ++n) ss += std::pow(m(a, 1999) - p.bias[a], 2);
  }
  CHECK(std::sqrt(ss / n) == doctest::Approx(2e-3 / std::sqrt(2000.0)).epsilon(0.2));
}

TEST_CASE("rmse and gamma") {
  const std::vector<Vec3> pred{Vec3(1e-3, 1e-3, 1e-3)}, zero{Vec3::Zero()};
  const RmseResult r = rmse(pred, zero);
  CHECK(r.pooled == doctest::Approx(1.0));
  CHECK(r.per_axis == Vec3(1.0, 1.0, 1.0));
  const std::vector<Vec3> p2{Vec3(3e-3, 0, 0), Vec3(0, 0, 0)}, l2{Vec3::Zero(), Vec3::Zero()};
  CHECK(rmse(p2, l2).pooled == doctest::Approx(std::sqrt(1.5)));
  CHECK(rmse(p2, l2).per_axis[0] == doctest::Approx(std::sqrt(4.5)));
  CHECK_THROWS(rmse(p2, zero));

  CHECK(gamma_ratio(0.5, 0.5) == 100.0);
  CHECK(gamma_ratio(1.0, 0.5) == doctest::Approx(200.0));
  CHECK(gamma_ratio(0.79598, 0.43959) == doctest::Approx(181.0733).epsilon(1e-6));
  CHECK_THROWS_AS(gamma_ratio(1.0, 0.0), DivisionError);
}

TEST_CASE("evaluation with the mean as the estimator matches the mean baseline") {
  const RunConfig cfg = small_config();
  const auto records = simulate_sources(cfg.simulation, cfg.seed);
  const BuiltDataset built = build_dataset(records, dataset_options_for(cfg, 60));
  std::vector<SignalRecord> test;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (built.sources[i].partition == Partition::Test) test.push_back(records[i]);
  const std::map<int, BiasEstimator> est{{60, [](const Window& w) { return baseline_bias(w); }}};
  const std::map<int, const LabeledDataset*> ds{{60, &built.dataset}};
  const EvalResult r = evaluate(est, ds, test);
  REQUIRE(r.rows.size() == 1);
  CHECK(std::abs(r.rows[0].model_rmse - r.rows[0].equal_duration_rmse) < 1e-12);
  CHECK(r.rows[0].gamma == doctest::Approx(100.0 * r.rows[0].model_rmse / r.baseline60_rmse));
  CHECK(r.rows[0].n_test == built.dataset.indices(Partition::Test).size());

  const std::map<int, BiasEstimator> wrong{{20, [](const Window& w) { return baseline_bias(w); }}};
  CHECK_THROWS_AS(evaluate(wrong, ds, test), ConfigError);

  const std::string table = format_table(r);
  CHECK(table.find("Baseline") != std::string::npos);
  CHECK(table.find("100.00") != std::string::npos);
}

TEST_CASE("full-record baseline") {
  std::vector<SignalRecord> recs{constant_record(Vec3(1e-3, 0, 0), 10, "a")};
  recs[0].true_bias = Vec3::Zero();
  CHECK(full_record_baseline_rmse(recs) == doctest::Approx(std::sqrt(1.0 / 3.0)));
  recs[0].true_bias.reset();
  CHECK_THROWS_AS(full_record_baseline_rmse(recs), InvalidParameterError);
}

TEST_CASE("training memorizes a constant target") {
  LabeledDataset ds;
  ds.k = 1;
  ds.fs = 200.0;
  ds.window_seconds = 0.3;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1e-3);
  for (int i = 0; i < 60; ++i) {
    Window w(60);
    for (double& v : w.values()) v = 0.01 + nd(rng);
    ds.samples.push_back({w, Vec3(0.01, -0.02, 0.005), "s" + std::to_string(i % 6), 0, 0, Vec3::Zero()});
  }
  ds.split.assign(ds.samples.size(), Partition::Train);
  BiasNetSpec spec;
  spec.input_length = 60;
  TrainConfig tc;
  tc.epochs = 60;
  tc.learning_rate = 2e-3;
  tc.validation_fraction = 0.2;
  const TrainResult r = train(ds, spec, tc);
  CHECK(r.curve.val_rmse.size() == static_cast<std::size_t>(r.epochs_run));
  CHECK(r.curve.val_rmse[static_cast<std::size_t>(r.best_epoch - 1)] < 0.1 * r.curve.val_rmse.front());
  CHECK((predict(r.model, ds.samples[0].window) - ds.samples[0].label).norm() < 1e-3);
}

TEST_CASE("training is deterministic and resumable") {
  RunConfig cfg = small_config();
  cfg.train.weight_average = 0.99;
  const auto records = simulate_sources(cfg.simulation, cfg.seed);
  const BuiltDataset built = build_dataset(records, dataset_options_for(cfg, 60));
  const BiasNetSpec spec = network_for(cfg, 60);
  const TrainResult a = train(built.dataset, spec, cfg.train);
  const TrainResult b = train(built.dataset, spec, cfg.train);
  CHECK(a.model == b.model);
  CHECK(a.curve.val_rmse == b.curve.val_rmse);

  const fs::path state = fs::temp_directory_path() / "gyrocal_test_resume.state";
  fs::remove(state);
  TrainControl ctl;
  ctl.state_path = state;
  ctl.stop_after_epoch = 1;
  const TrainResult part = train(built.dataset, spec, cfg.train, ctl);
  CHECK(part.epochs_run == 1);
  ctl.stop_after_epoch.reset();
  const TrainResult resumed = train(built.dataset, spec, cfg.train, ctl);
  CHECK(resumed.model == a.model);
  CHECK(resumed.curve.train_rmse == a.curve.train_rmse);

  TrainConfig other = cfg.train;
  other.learning_rate *= 2;
  CHECK_THROWS_AS(train(built.dataset, spec, other, ctl), ConfigError);
  fs::remove(state);
}

TEST_CASE("train config validation") {
  TrainConfig t;
  CHECK_NOTHROW(t.validate());
  t.weight_average = 1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.validation_fraction = 0.6;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.lr_final_scale = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("run config round trip and per-K epochs") {
  RunConfig c = default_run_config();
  c.seed = 99;
  c.train.weight_average = 0.5;
  c.epochs_per_k = {{6, 12}, {60, 500}};
  const RunConfig back = parse_run_config(dump_run_config(c));
  CHECK(dump_run_config(back) == dump_run_config(c));
  CHECK(config_hash(back) == config_hash(c));
  CHECK(train_config_for(back, 6).epochs == 12);
  CHECK(train_config_for(back, 60).epochs == c.train.epochs);
  CHECK(train_config_for(back, 20).epochs == c.train.epochs);

  RunConfig moved = c;
  moved.output_dir = "elsewhere";
  CHECK(config_hash(moved) == config_hash(c));
  moved.seed = 100;
  CHECK(config_hash(moved) != config_hash(c));

  CHECK_THROWS_AS(parse_run_config("{\"bogus\": 1}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{\"train\": {\"epochs_per_k\": {\"x\": 3}}}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{\"train\": {\"epochs\": \"many\"}}"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);
  CHECK(parse_run_config("{}").seed == default_run_config().seed);
}

TEST_CASE("every K shares the test sources") {
  const RunConfig cfg = small_config();
  const auto records = simulate_sources(cfg.simulation, cfg.seed);
  auto test_ids = [&](int k) {
    std::vector<std::string> ids;
    for (const SourceSummary& s : build_dataset(records, dataset_options_for(cfg, k)).sources)
      if (s.partition == Partition::Test) ids.push_back(s.id);
    return ids;
  };
  CHECK(test_ids(60) == test_ids(20));
  CHECK(test_ids(60) == test_ids(6));
}

TEST_CASE("network input length follows K") {
  const RunConfig c = default_run_config();
  CHECK(network_for(c, 60).input_length == 200);
  CHECK(network_for(c, 6).input_length == 2000);
  CHECK_THROWS_AS(network_for(c, 7), PartitionError);
}
