#include "gyrocal/nn/adam.hpp"

#include <cmath>
#include <limits>

#include "gyrocal/errors.hpp"

namespace gyrocal::nn {

OptimizerState make_optimizer(std::size_t n_params, const AdamConfig& hp) {
  if (!(hp.learning_rate > 0.0) || !(hp.beta1 >= 0.0 && hp.beta1 < 1.0) ||
      !(hp.beta2 >= 0.0 && hp.beta2 < 1.0) || !(hp.epsilon > 0.0)) {
    throw InvalidParameterError("invalid optimizer hyperparameters");
  }
  return {hp, std::vector<double>(n_params, 0.0), std::vector<double>(n_params, 0.0), 0};
}

void optimizer_step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
                    std::span<const double> lr_scale) {
  if (params.size() != grads.size() || params.size() != state.m.size() || state.m.size() != state.v.size() ||
      (!lr_scale.empty() && lr_scale.size() != params.size())) {
    throw DimensionError("optimizer_step: parameter, gradient and moment sizes differ");
  }
  ++state.step;
  const AdamConfig& hp = state.hp;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hp.beta1, t);
  const double c2 = 1.0 - std::pow(hp.beta2, t);
  constexpr double kTiny = std::numeric_limits<double>::min();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
    state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
    // Moments of units that stopped receiving gradient decay into subnormals,
    // which are very slow on x86.
    if (std::abs(state.m[i]) < kTiny) state.m[i] = 0.0;
    if (state.v[i] < kTiny) state.v[i] = 0.0;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    const double lr = lr_scale.empty() ? hp.learning_rate : hp.learning_rate * lr_scale[i];
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + hp.epsilon);
  }
}

}  // namespace gyrocal::nn
