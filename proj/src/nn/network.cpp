#include "gyrocal/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <omp.h>

#include "gyrocal/errors.hpp"
#include "gyrocal/random.hpp"

namespace gyrocal::nn {

namespace {

ConvDims conv_dims(const LayerSpec& l, const Shape& in) {
  return {l.in, in.length, l.out, l.kernel, l.stride};
}

PoolDims pool_dims(const LayerSpec& l, const Shape& in) {
  return {in.channels, in.length, l.kernel, l.stride};
}

std::string layer_label(std::size_t i, const LayerSpec& l) {
  return "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
}

}  // namespace

std::string to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::MaxPool1d: return "maxpool1d";
    case LayerKind::Relu: return "relu";
    case LayerKind::Dense: return "dense";
  }
  return "unknown";
}

std::string Shape::str() const {
  return "(" + std::to_string(channels) + "x" + std::to_string(length) + ")";
}

std::vector<Shape> infer_shapes(Shape input, std::span<const LayerSpec> layers) {
  if (input.channels < 1 || input.length < 1) throw DimensionError("input shape " + input.str() + " is empty");
  std::vector<Shape> shapes{input};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const Shape in = shapes.back();
    Shape out = in;
    switch (l.kind) {
      case LayerKind::Conv1d:
        if (l.in != in.channels) {
          throw DimensionError(layer_label(i, l) + ": expects " + std::to_string(l.in) +
                               " input channels, got shape " + in.str());
        }
        if (l.out < 1 || l.kernel < 1 || l.stride < 1) throw DimensionError(layer_label(i, l) + ": invalid geometry");
        if (in.length < l.kernel) {
          throw DimensionError(layer_label(i, l) + ": kernel " + std::to_string(l.kernel) +
                               " longer than input " + in.str());
        }
        out = {l.out, (in.length - l.kernel) / l.stride + 1};
        break;
      case LayerKind::MaxPool1d:
        if (l.kernel < 1 || l.stride < 1) throw DimensionError(layer_label(i, l) + ": invalid geometry");
        if (in.length < l.kernel) {
          throw DimensionError(layer_label(i, l) + ": window " + std::to_string(l.kernel) +
                               " longer than input " + in.str());
        }
        out = {in.channels, (in.length - l.kernel) / l.stride + 1};
        break;
      case LayerKind::Relu:
        break;
      case LayerKind::Dense:
        if (static_cast<std::size_t>(l.in) != in.size()) {
          throw DimensionError(layer_label(i, l) + ": expects " + std::to_string(l.in) +
                               " features, got shape " + in.str());
        }
        if (l.out < 1) throw DimensionError(layer_label(i, l) + ": no outputs");
        out = {l.out, 1};
        break;
      default:
        throw DimensionError(layer_label(i, l) + ": unknown layer kind");
    }
    shapes.push_back(out);
  }
  return shapes;
}

Network::Network(Shape input, std::vector<LayerSpec> layers)
    : layers_(std::move(layers)), shapes_(infer_shapes(input, layers_)) {
  std::size_t total = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    offsets_.push_back(total);
    total += weight_count(i) + bias_count(i);
  }
  params_.assign(total, 0.0);
}

std::size_t Network::weight_count(std::size_t layer) const {
  const LayerSpec& l = layers_.at(layer);
  switch (l.kind) {
    case LayerKind::Conv1d: return static_cast<std::size_t>(l.out) * l.in * l.kernel;
    case LayerKind::Dense: return static_cast<std::size_t>(l.out) * l.in;
    default: return 0;
  }
}

std::size_t Network::bias_count(std::size_t layer) const {
  const LayerSpec& l = layers_.at(layer);
  return (l.kind == LayerKind::Conv1d || l.kind == LayerKind::Dense) ? static_cast<std::size_t>(l.out) : 0;
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const std::size_t nw = weight_count(i);
    if (nw == 0) continue;
    const LayerSpec& l = layers_[i];
    const double fan_in = l.kind == LayerKind::Conv1d ? static_cast<double>(l.in) * l.kernel : l.in;
    const bool feeds_relu = i + 1 < layers_.size() && layers_[i + 1].kind == LayerKind::Relu;
    std::normal_distribution<double> dist(0.0, std::sqrt((feeds_relu ? 2.0 : 1.0) / fan_in));
    double* w = params_.data() + offsets_[i];
    for (std::size_t j = 0; j < nw; ++j) w[j] = dist(rng);
    std::fill(w + nw, w + nw + bias_count(i), 0.0);
  }
}

Network::Workspace Network::make_workspace() const {
  Workspace ws;
  ws.acts.resize(shapes_.size());
  for (std::size_t i = 0; i < shapes_.size(); ++i) ws.acts[i].assign(shapes_[i].size(), 0.0);
  ws.argmax.resize(layers_.size());
  ws.col.resize(layers_.size());
  std::size_t max_act = 0, max_col = 0;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    max_act = std::max(max_act, shapes_[i].size());
    if (layers_[i].kind == LayerKind::MaxPool1d) ws.argmax[i].assign(shapes_[i + 1].size(), 0);
    if (layers_[i].kind == LayerKind::Conv1d) {
      const std::size_t n = conv_dims(layers_[i], shapes_[i]).col_size();
      ws.col[i].assign(n, 0.0);
      max_col = std::max(max_col, n);
    }
  }
  max_act = std::max(max_act, shapes_.back().size());
  ws.dcol.assign(max_col, 0.0);
  ws.delta_a.assign(max_act, 0.0);
  ws.delta_b.assign(max_act, 0.0);
  return ws;
}

std::span<const double> Network::forward(std::span<const double> input, Workspace& ws) const {
  if (input.size() != shapes_.front().size()) {
    throw DimensionError("network input: expected " + std::to_string(shapes_.front().size()) +
                         " values " + shapes_.front().str() + ", got " + std::to_string(input.size()));
  }
  if (ws.acts.size() != shapes_.size()) ws = make_workspace();
  std::copy(input.begin(), input.end(), ws.acts[0].begin());
  const bool ref = backend_ == Backend::Reference;

  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const LayerSpec& l = layers_[i];
    const double* in = ws.acts[i].data();
    double* out = ws.acts[i + 1].data();
    const double* w = params_.data() + offsets_[i];
    const double* b = w + weight_count(i);
    switch (l.kind) {
      case LayerKind::Conv1d: {
        const ConvDims d = conv_dims(l, shapes_[i]);
        // The im2col buffer doubles as the backward cache of the fast path.
        ref ? reference::conv1d_forward(d, in, w, b, out, nullptr)
            : fast::conv1d_forward(d, in, w, b, out, ws.col[i].data());
        break;
      }
      case LayerKind::MaxPool1d: {
        const PoolDims d = pool_dims(l, shapes_[i]);
        ref ? reference::maxpool_forward(d, in, out, ws.argmax[i].data())
            : fast::maxpool_forward(d, in, out, ws.argmax[i].data());
        break;
      }
      case LayerKind::Relu: {
        const std::size_t n = shapes_[i].size();
        for (std::size_t j = 0; j < n; ++j) out[j] = in[j] > 0.0 ? in[j] : 0.0;
        break;
      }
      case LayerKind::Dense:
        ref ? reference::dense_forward(l.in, l.out, in, w, b, out)
            : fast::dense_forward(l.in, l.out, in, w, b, out);
        break;
    }
  }
#ifndef NDEBUG
  for (double v : ws.acts.back()) {
    if (!std::isfinite(v)) throw NumericalError("network output is not finite");
  }
#endif
  ws.ready = true;
  return ws.acts.back();
}

void Network::backward(Workspace& ws, std::span<const double> dloss_doutput, std::span<double> grad,
                       std::span<double* const> deferred) const {
  if (!deferred.empty() && deferred.size() != layers_.size()) throw DimensionError("backward: deferred list has the wrong size");
  if (!ws.ready) throw StateError("backward called without a preceding forward pass");
  if (dloss_doutput.size() != shapes_.back().size()) throw DimensionError("backward: output gradient has the wrong size");
  if (grad.size() != params_.size()) throw DimensionError("backward: gradient buffer has the wrong size");
  const bool ref = backend_ == Backend::Reference;

  AlignedVector<double>* delta = &ws.delta_a;
  AlignedVector<double>* next = &ws.delta_b;
  std::copy(dloss_doutput.begin(), dloss_doutput.end(), delta->begin());

  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    const LayerSpec& l = layers_[ii];
    const double* in = ws.acts[ii].data();
    const double* w = params_.data() + offsets_[ii];
    double* dw = grad.data() + offsets_[ii];
    double* db = dw + weight_count(ii);
    double* din = ii > 0 ? next->data() : nullptr;
    switch (l.kind) {
      case LayerKind::Conv1d: {
        const ConvDims d = conv_dims(l, shapes_[ii]);
        ref ? reference::conv1d_backward(d, in, w, delta->data(), dw, db, din, nullptr, nullptr)
            : fast::conv1d_backward(d, in, w, delta->data(), dw, db, din, ws.col[ii].data(), ws.dcol.data());
        break;
      }
      case LayerKind::MaxPool1d: {
        if (!din) break;
        const PoolDims d = pool_dims(l, shapes_[ii]);
        ref ? reference::maxpool_backward(d, delta->data(), ws.argmax[ii].data(), din)
            : fast::maxpool_backward(d, delta->data(), ws.argmax[ii].data(), din);
        break;
      }
      case LayerKind::Relu: {
        if (!din) break;
        const std::size_t n = shapes_[ii].size();
        for (std::size_t j = 0; j < n; ++j) din[j] = in[j] > 0.0 ? (*delta)[j] : 0.0;
        break;
      }
      case LayerKind::Dense:
        if (!deferred.empty() && deferred[ii]) {
          std::copy(delta->begin(), delta->begin() + l.out, deferred[ii]);
          for (int o = 0; o < l.out; ++o) db[o] += (*delta)[static_cast<std::size_t>(o)];
          if (din) fast::dense_input_grad(l.in, l.out, w, delta->data(), din);
          break;
        }
        ref ? reference::dense_backward(l.in, l.out, in, w, delta->data(), dw, db, din)
            : fast::dense_backward(l.in, l.out, in, w, delta->data(), dw, db, din);
        break;
    }
    std::swap(delta, next);
  }
  ws.ready = false;
}

double mse_loss(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size() || pred.empty()) throw DimensionError("mse_loss: shape mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    acc += e * e;
  }
  return acc / static_cast<double>(pred.size());
}

void mse_loss_grad(std::span<const double> pred, std::span<const double> target, std::span<double> grad) {
  if (pred.size() != target.size() || grad.size() != pred.size() || pred.empty()) {
    throw DimensionError("mse_loss_grad: shape mismatch");
  }
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) grad[i] = scale * (pred[i] - target[i]);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return std::max(1, omp_get_max_threads());
}

BatchGradient::BatchGradient(const Network& net, int threads) : threads_(resolve_threads(threads)) {
  ws_.reserve(static_cast<std::size_t>(threads_));
  dense_x_.assign(static_cast<std::size_t>(threads_), std::vector<AlignedVector<double>>(net.layers().size()));
  dense_g_ = dense_x_;
  for (int t = 0; t < threads_; ++t) {
    ws_.push_back(net.make_workspace());
    partial_.emplace_back(net.parameter_count(), 0.0);
  }
}

double BatchGradient::compute(const Network& net, std::span<const double* const> inputs,
                              std::span<const double> targets, std::span<double> grad) {
  const std::size_t batch = inputs.size();
  const std::size_t n_out = net.output_shape().size();
  if (batch == 0) throw DimensionError("empty batch");
  if (targets.size() != batch * n_out) throw DimensionError("batch targets have the wrong size");
  if (grad.size() != net.parameter_count()) throw DimensionError("gradient buffer has the wrong size");
  if (partial_.front().size() != net.parameter_count()) throw DimensionError("BatchGradient built for another network");
  sample_loss_.assign(batch, 0.0);

  const std::size_t in_size = net.input_shape().size();
  const double scale = 2.0 / static_cast<double>(batch * n_out);
  const int nt = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads_), batch));

  std::exception_ptr failure;
#pragma omp parallel num_threads(nt)
  {
    const int tid = omp_get_thread_num();
    const std::size_t lo = batch * static_cast<std::size_t>(tid) / static_cast<std::size_t>(nt);
    const std::size_t hi = batch * static_cast<std::size_t>(tid + 1) / static_cast<std::size_t>(nt);
    AlignedVector<double>& g = partial_[static_cast<std::size_t>(tid)];
    std::fill(g.begin(), g.end(), 0.0);
    std::vector<double> dout(n_out);
    try {
      // Dense weight gradients are summed as one GEMM per chunk instead of a
      // rank-1 update per sample, which is memory-bound for wide layers.
      const bool defer = net.backend() == Backend::Fast;
      const std::size_t nb = hi - lo;
      auto& xs = dense_x_[static_cast<std::size_t>(tid)];
      auto& gs = dense_g_[static_cast<std::size_t>(tid)];
      std::vector<double*> deferred;
      if (defer) {
        deferred.assign(net.layers().size(), nullptr);
        for (std::size_t i = 0; i < net.layers().size(); ++i) {
          const LayerSpec& l = net.layers()[i];
          if (l.kind != LayerKind::Dense) continue;
          xs[i].resize(nb * static_cast<std::size_t>(l.in));
          gs[i].resize(nb * static_cast<std::size_t>(l.out));
        }
      }
      for (std::size_t s = lo; s < hi; ++s) {
        const std::span<const double> pred = net.forward({inputs[s], in_size}, ws_[static_cast<std::size_t>(tid)]);
        double loss = 0.0;
        for (std::size_t o = 0; o < n_out; ++o) {
          const double e = pred[o] - targets[s * n_out + o];
          loss += e * e;
          dout[o] = scale * e;
        }
        sample_loss_[s] = loss;
        Network::Workspace& ws = ws_[static_cast<std::size_t>(tid)];
        if (defer) {
          for (std::size_t i = 0; i < deferred.size(); ++i) {
            const LayerSpec& l = net.layers()[i];
            if (l.kind != LayerKind::Dense) continue;
            const std::span<const double> x = ws.activation(i);
            std::copy(x.begin(), x.end(), xs[i].begin() + static_cast<std::ptrdiff_t>((s - lo) * l.in));
            deferred[i] = gs[i].data() + (s - lo) * static_cast<std::size_t>(l.out);
          }
        }
        net.backward(ws, dout, g, deferred);
      }
      if (defer && nb > 0) {
        for (std::size_t i = 0; i < deferred.size(); ++i) {
          const LayerSpec& l = net.layers()[i];
          if (l.kind != LayerKind::Dense) continue;
          fast::dense_weight_grad_batch(l.in, l.out, nb, xs[i].data(), gs[i].data(), g.data() + net.weight_offset(i));
        }
      }
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::copy(partial_[0].begin(), partial_[0].end(), grad.begin());
  for (int t = 1; t < nt; ++t) {
    const AlignedVector<double>& g = partial_[static_cast<std::size_t>(t)];
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[j];
  }
  double total = 0.0;
  for (double l : sample_loss_) total += l;
  return total / static_cast<double>(batch * n_out);
}

}  // namespace gyrocal::nn

