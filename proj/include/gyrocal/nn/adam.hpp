#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace gyrocal::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct OptimizerState {
  AdamConfig hp;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment
  std::uint64_t step = 0;
};

OptimizerState make_optimizer(std::size_t n_params, const AdamConfig& hp);

// Bias-corrected adaptive-moment update; increments state.step first.
// `lr_scale`, when non-empty, multiplies the learning rate per parameter.
void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                    std::span<const double> lr_scale = {});

}  // namespace gyrocal::nn
