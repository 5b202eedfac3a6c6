#pragma once

// The two bias estimators: the window mean and the learned BiasNet regressor.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "gyrocal/dataset.hpp"
#include "gyrocal/nn/adam.hpp"
#include "gyrocal/nn/network.hpp"

namespace gyrocal {

// conv(3->c1, k1) relu pool(p1) conv(c1->c2, k2) relu pool(p2) dense(hidden) relu dense(3)
struct BiasNetSpec {
  int input_length = 200;
  int conv1_channels = 16;
  int conv1_kernel = 7;
  int conv1_stride = 1;
  int pool1 = 4;
  int conv2_channels = 32;
  int conv2_kernel = 7;
  int conv2_stride = 1;
  int pool2 = 4;
  int hidden = 64;

  // Smallest input length for which every stage keeps at least one sample.
  int min_input_length() const;
  std::vector<nn::LayerSpec> layers() const;  // throws DimensionError when too short
  nn::Network build(std::uint64_t seed) const;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 8;
  double learning_rate = 2e-3;
  std::uint64_t seed = 1;
  int patience = 10;
  double validation_fraction = 0.1;
  int threads = 1;  // 0 = all available
  // The learning rate anneals exponentially to learning_rate * lr_final_scale
  // at the last epoch (1 = constant).
  double lr_final_scale = 0.1;
  // Learning-rate multiplier for bias parameters. Inputs are raw rad/s, so
  // activations are O(1e-2) while an Adam step moves every parameter by ~lr.
  double bias_lr_scale = 1.0;
  // Per-step decay of an exponential moving average of the weights. Validation
  // and the returned model use the average (0 = plain weights).
  double weight_average = 0.999;

  void validate() const;
};

struct LossCurve {
  std::vector<double> train_rmse;  // [mrad/s]
  std::vector<double> val_rmse;    // [mrad/s]
};

struct TrainResult {
  nn::Network model;  // parameters of the best validation epoch
  LossCurve curve;
  int best_epoch = 0;  // 1-based
  int epochs_run = 0;
  bool early_stopped = false;
};

struct TrainControl {
  // Per-epoch resumable state; resumed from when the file exists.
  std::optional<std::filesystem::path> state_path;
  // Stop (as if interrupted) after this many total epochs.
  std::optional<int> stop_after_epoch;
  std::function<void(int epoch, double train_rmse, double val_rmse)> on_epoch;
};

Vec3 baseline_bias(const Window& window);

// Cumulative per-axis mean: entry t is the mean of samples 0..t.
Window running_mean_curve(const SignalRecord& record);

Vec3 predict(const nn::Network& model, const Window& window);
std::vector<Vec3> predict_all(const nn::Network& model, std::span<const Window* const> windows, int threads = 1);

// Mini-batch Adam on the MSE over the train split; validation is carved from
// the train sources. Returns the best-validation parameters.
TrainResult train(const LabeledDataset& dataset, const BiasNetSpec& spec, const TrainConfig& config,
                  const TrainControl& control = {});

}  // namespace gyrocal
