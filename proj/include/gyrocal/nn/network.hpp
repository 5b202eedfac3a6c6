#pragma once

// Fixed-topology feed-forward network over (channels, length) tensors with
// exact reverse-mode gradients. Parameters live in one flat array.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gyrocal/nn/aligned.hpp"
#include "gyrocal/nn/kernels.hpp"

namespace gyrocal::nn {

enum class LayerKind : std::uint32_t { Conv1d = 1, MaxPool1d = 2, Relu = 3, Dense = 4 };

std::string to_string(LayerKind k);

// Conv1d: in/out channels, kernel, stride. MaxPool1d: kernel = window.
// Dense: in/out features (input is the flattened previous tensor).
struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  int in = 0;
  int out = 0;
  int kernel = 0;
  int stride = 1;

  static LayerSpec conv(int in, int out, int kernel, int stride = 1) { return {LayerKind::Conv1d, in, out, kernel, stride}; }
  static LayerSpec pool(int window, int stride) { return {LayerKind::MaxPool1d, 0, 0, window, stride}; }
  static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 0, 1}; }
  static LayerSpec dense(int in, int out) { return {LayerKind::Dense, in, out, 0, 1}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Shape {
  int channels = 0;
  int length = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(channels) * length; }
  std::string str() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

// Runtime shapes of every stage; throws DimensionError naming the offending layer.
std::vector<Shape> infer_shapes(Shape input, std::span<const LayerSpec> layers);

class Network {
 public:
  // Activations, pooling indices and im2col buffers of one forward pass.
  class Workspace {
   public:
    Workspace() = default;
    std::span<const double> activation(std::size_t stage) const { return acts.at(stage); }

   private:
    friend class Network;
    std::vector<AlignedVector<double>> acts;
    std::vector<std::vector<int>> argmax;
    std::vector<AlignedVector<double>> col;
    AlignedVector<double> dcol;
    AlignedVector<double> delta_a, delta_b;
    bool ready = false;
  };

  Network(Shape input, std::vector<LayerSpec> layers);

  Shape input_shape() const noexcept { return shapes_.front(); }
  Shape output_shape() const noexcept { return shapes_.back(); }
  const std::vector<Shape>& shapes() const noexcept { return shapes_; }
  const std::vector<LayerSpec>& layers() const noexcept { return layers_; }

  std::size_t parameter_count() const noexcept { return params_.size(); }
  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
  std::size_t weight_count(std::size_t layer) const;
  std::size_t bias_count(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const { return offsets_.at(layer) + weight_count(layer); }

  // He-normal weights for layers feeding a ReLU, fan-in scaled otherwise; zero biases.
  void initialize(std::uint64_t seed);

  Backend backend() const noexcept { return backend_; }
  void set_backend(Backend b) noexcept { backend_ = b; }

  Workspace make_workspace() const;

  // Returns a view into `ws` valid until the next forward on the same workspace.
  std::span<const double> forward(std::span<const double> input, Workspace& ws) const;

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output). Needs a
  // preceding forward on `ws` (StateError otherwise).
  // With `deferred` non-empty (one entry per layer), each dense layer whose
  // entry is non-null skips its weight gradient and writes d(loss)/d(output)
  // there instead; the caller accumulates those weights from activation(layer).
  void backward(Workspace& ws, std::span<const double> dloss_doutput, std::span<double> grad,
                std::span<double* const> deferred = {}) const;


  friend bool operator==(const Network& a, const Network& b) {
    return a.layers_ == b.layers_ && a.shapes_ == b.shapes_ && a.params_ == b.params_;
  }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_;
  AlignedVector<double> params_;
  Backend backend_ = Backend::Fast;
};

// Mean over all entries of (pred - target)^2.
double mse_loss(std::span<const double> pred, std::span<const double> target);
// Gradient of mse_loss with respect to pred, written into `grad`.
void mse_loss_grad(std::span<const double> pred, std::span<const double> target, std::span<double> grad);

// Mini-batch MSE gradient. Samples are split into contiguous static chunks per
// thread and partial gradients are summed in thread order, so results are
// bit-identical for a fixed thread count.
class BatchGradient {
 public:
  BatchGradient(const Network& net, int threads);

  int threads() const noexcept { return threads_; }

  // `inputs[i]` points at a sample of net.input_shape().size() values;
  // `targets` holds output_size values per sample. Returns the batch MSE and
  // writes its gradient into `grad`.
  double compute(const Network& net, std::span<const double* const> inputs,
                 std::span<const double> targets, std::span<double> grad);

 private:
  int threads_;
  std::vector<Network::Workspace> ws_;
  std::vector<AlignedVector<double>> partial_;
  // Per thread and dense layer: stacked inputs and output gradients of a chunk.
  std::vector<std::vector<AlignedVector<double>>> dense_x_, dense_g_;
  std::vector<double> sample_loss_;
};

// Worker count used when a config asks for 0 (= all available).
int resolve_threads(int requested);

}  // namespace gyrocal::nn
