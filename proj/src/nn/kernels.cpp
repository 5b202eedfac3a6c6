#include "gyrocal/nn/kernels.hpp"

#include <Eigen/Dense>

namespace gyrocal::nn::fast {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapR = Eigen::Map<RowMat>;
using CMapR = Eigen::Map<const RowMat>;
using CVec = Eigen::Map<const Eigen::VectorXd>;
using Vec = Eigen::Map<Eigen::VectorXd>;

// col[(c*k + j), t] = in[c, t*stride + j]
void im2col(const ConvDims& d, const double* in, double* col) {
  const int lo = d.out_length();
  for (int c = 0; c < d.in_channels; ++c) {
    const double* src = in + static_cast<std::size_t>(c) * d.length;
    for (int j = 0; j < d.kernel; ++j) {
      double* row = col + (static_cast<std::size_t>(c) * d.kernel + j) * lo;
      if (d.stride == 1) {
        for (int t = 0; t < lo; ++t) row[t] = src[t + j];
      } else {
        for (int t = 0; t < lo; ++t) row[t] = src[t * d.stride + j];
      }
    }
  }
}

}  // namespace

void conv1d_forward(const ConvDims& d, const double* in, const double* w, const double* b,
                    double* out, double* col) {
  const int lo = d.out_length();
  const int ck = d.in_channels * d.kernel;
  im2col(d, in, col);
  MapR y(out, d.out_channels, lo);
  y.noalias() = CMapR(w, d.out_channels, ck) * CMapR(col, ck, lo);
  y.colwise() += CVec(b, d.out_channels);
}

void conv1d_backward(const ConvDims& d, const double* /*in*/, const double* w, const double* dout,
                     double* dw, double* db, double* din, const double* col, double* dcol) {
  const int lo = d.out_length();
  const int ck = d.in_channels * d.kernel;
  CMapR g(dout, d.out_channels, lo);
  MapR(dw, d.out_channels, ck).noalias() += g * CMapR(col, ck, lo).transpose();
  Vec(db, d.out_channels) += g.rowwise().sum();
  if (!din) return;

  MapR dc(dcol, ck, lo);
  dc.noalias() = CMapR(w, d.out_channels, ck).transpose() * g;
  std::fill(din, din + static_cast<std::size_t>(d.in_channels) * d.length, 0.0);
  for (int c = 0; c < d.in_channels; ++c) {
    double* dst = din + static_cast<std::size_t>(c) * d.length;
    for (int j = 0; j < d.kernel; ++j) {
      const double* row = dcol + (static_cast<std::size_t>(c) * d.kernel + j) * lo;
      for (int t = 0; t < lo; ++t) dst[t * d.stride + j] += row[t];
    }
  }
}

void maxpool_forward(const PoolDims& d, const double* in, double* out, int* argmax) {
  const int lo = d.out_length();
  const int w = d.window;
  const int stride = d.stride;
  for (int c = 0; c < d.channels; ++c) {
    const double* src = in + static_cast<std::size_t>(c) * d.length;
    double* o = out + static_cast<std::size_t>(c) * lo;
    int* a = argmax + static_cast<std::size_t>(c) * lo;
    for (int t = 0; t < lo; ++t) {
      const int start = t * stride;
      const double* x = src + start;
      // Branch-free select: on noisy inputs the comparison is unpredictable.
      int best = 0;
      double v = x[0];
      for (int j = 1; j < w; ++j) {
        const bool gt = x[j] > v;
        v = gt ? x[j] : v;
        best = gt ? j : best;
      }
      o[t] = v;
      a[t] = start + best;
    }
  }
}

void maxpool_backward(const PoolDims& d, const double* dout, const int* argmax, double* din) {
  const int lo = d.out_length();
  std::fill(din, din + static_cast<std::size_t>(d.channels) * d.length, 0.0);
  for (int c = 0; c < d.channels; ++c) {
    double* dst = din + static_cast<std::size_t>(c) * d.length;
    for (int t = 0; t < lo; ++t) dst[argmax[c * lo + t]] += dout[c * lo + t];
  }
}

void dense_forward(int n_in, int n_out, const double* x, const double* w, const double* b, double* y) {
  Vec out(y, n_out);
  out.noalias() = CMapR(w, n_out, n_in) * CVec(x, n_in);
  out += CVec(b, n_out);
}

void dense_backward(int n_in, int n_out, const double* x, const double* w, const double* dy,
                    double* dw, double* db, double* dx) {
  CVec g(dy, n_out);
  MapR(dw, n_out, n_in).noalias() += g * CVec(x, n_in).transpose();
  Vec(db, n_out) += g;
  if (dx) Vec(dx, n_in).noalias() = CMapR(w, n_out, n_in).transpose() * g;
}

void dense_input_grad(int n_in, int n_out, const double* w, const double* dy, double* dx) {
  Vec(dx, n_in).noalias() = CMapR(w, n_out, n_in).transpose() * CVec(dy, n_out);
}

void dense_weight_grad_batch(int n_in, int n_out, std::size_t batch, const double* x, const double* dy,
                             double* dw) {
  const auto b = static_cast<Eigen::Index>(batch);
  MapR(dw, n_out, n_in).noalias() += CMapR(dy, b, n_out).transpose() * CMapR(x, b, n_in);
}

}  // namespace gyrocal::nn::fast
