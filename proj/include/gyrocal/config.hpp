#pragma once

// Run configuration (JSON), its hash, and the synthetic scenario it describes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gyrocal/dataset.hpp"
#include "gyrocal/estimator.hpp"
#include "gyrocal/noise_sim.hpp"

namespace gyrocal {

struct SensorProfile {
  std::string name;
  NoiseCoefficients noise;
  double bias_range = 0.02;      // per-axis base bias drawn uniformly in +-range [rad/s]
  double repeatability = 0.002;  // per-record (power-on) bias spread [rad/s]
};

struct SimulationConfig {
  double fs = 200.0;
  double duration = 60.0;
  int records_per_sensor = 10;
  std::vector<SensorProfile> sensors;
  DisturbanceSpec disturbance;  // injected into the recordings themselves
};

struct CalibrationConfig {
  double rate_magnitude = 1.0;   // [rad/s]
  double averaging_time = 60.0;  // [s]
  Vec3 scale_factor = Vec3(0.01, -0.015, 0.02);
  Misalignment misalignment{0.002, -0.001, 0.003, 0.0015, -0.0025, 0.001};
  Vec3 bias = Vec3(0.01, -0.005, 0.0075);
  NoiseCoefficients noise;
};

struct RunConfig {
  std::string scenario = "clean";
  std::uint64_t seed = 1;
  SimulationConfig simulation;
  std::vector<int> k_values{60, 20, 10, 6};
  DatasetOptions dataset;  // k and seed are filled per run
  BiasNetSpec network;     // input_length is filled per K
  TrainConfig train;
  // Per-K epoch cap on top of train.epochs; long windows cost more per epoch.
  std::map<int, int> epochs_per_k;
  CalibrationConfig calibration;
  std::filesystem::path output_dir = "run";
};

// Five sensors with white noise levels between 1.5 and 3 mrad/s per sample at 200 Hz.
std::vector<SensorProfile> default_sensor_profiles(double fs = 200.0);
RunConfig default_run_config();
// Clean regime with one shared noise level and a 5-20 Hz random-phase sinusoid
// of amplitude 5 sigma in every augmented copy.
RunConfig disturbance_run_config();

RunConfig parse_run_config(std::string_view json_text);  // ConfigError on bad input
RunConfig load_run_config(const std::filesystem::path& path);
std::string dump_run_config(const RunConfig& config);
// crc32 of the canonical dump, excluding the output directory.
std::string config_hash(const RunConfig& config);

DatasetOptions dataset_options_for(const RunConfig& config, int k);
BiasNetSpec network_for(const RunConfig& config, int k);
TrainConfig train_config_for(const RunConfig& config, int k);

// sensors x records_per_sensor stationary records with known true bias.
std::vector<SignalRecord> simulate_sources(const SimulationConfig& sim, std::uint64_t seed);

// The protocol points (six signed axes plus zero rate) for calibration.
std::vector<SignalRecord> simulate_calibration(const CalibrationConfig& cal, double fs, std::uint64_t seed,
                                               std::vector<Vec3>* known_rates = nullptr);

}  // namespace gyrocal
