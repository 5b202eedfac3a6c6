#include "gyrocal/nn/kernels.hpp"

namespace gyrocal::nn::reference {

void conv1d_forward(const ConvDims& d, const double* in, const double* w, const double* b,
                    double* out, double* /*col*/) {
  const int lo = d.out_length();
  for (int o = 0; o < d.out_channels; ++o) {
    for (int t = 0; t < lo; ++t) {
      double acc = b[o];
      for (int c = 0; c < d.in_channels; ++c) {
        for (int j = 0; j < d.kernel; ++j) {
          acc += w[(o * d.in_channels + c) * d.kernel + j] * in[c * d.length + t * d.stride + j];
        }
      }
      out[o * lo + t] = acc;
    }
  }
}

void conv1d_backward(const ConvDims& d, const double* in, const double* w, const double* dout,
                     double* dw, double* db, double* din, const double* /*col*/, double* /*dcol*/) {
  const int lo = d.out_length();
  if (din) {
    for (int i = 0; i < d.in_channels * d.length; ++i) din[i] = 0.0;
  }
  for (int o = 0; o < d.out_channels; ++o) {
    for (int t = 0; t < lo; ++t) {
      const double g = dout[o * lo + t];
      db[o] += g;
      for (int c = 0; c < d.in_channels; ++c) {
        for (int j = 0; j < d.kernel; ++j) {
          const int wi = (o * d.in_channels + c) * d.kernel + j;
          const int xi = c * d.length + t * d.stride + j;
          dw[wi] += g * in[xi];
          if (din) din[xi] += g * w[wi];
        }
      }
    }
  }
}

void maxpool_forward(const PoolDims& d, const double* in, double* out, int* argmax) {
  const int lo = d.out_length();
  for (int c = 0; c < d.channels; ++c) {
    for (int t = 0; t < lo; ++t) {
      int best = t * d.stride;
      for (int j = 1; j < d.window; ++j) {
        const int i = t * d.stride + j;
        if (in[c * d.length + i] > in[c * d.length + best]) best = i;
      }
      out[c * lo + t] = in[c * d.length + best];
      argmax[c * lo + t] = best;
    }
  }
}

void maxpool_backward(const PoolDims& d, const double* dout, const int* argmax, double* din) {
  const int lo = d.out_length();
  for (int i = 0; i < d.channels * d.length; ++i) din[i] = 0.0;
  for (int c = 0; c < d.channels; ++c) {
    for (int t = 0; t < lo; ++t) din[c * d.length + argmax[c * lo + t]] += dout[c * lo + t];
  }
}

void dense_forward(int n_in, int n_out, const double* x, const double* w, const double* b, double* y) {
  for (int o = 0; o < n_out; ++o) {
    double acc = b[o];
    for (int i = 0; i < n_in; ++i) acc += w[o * n_in + i] * x[i];
    y[o] = acc;
  }
}

void dense_backward(int n_in, int n_out, const double* x, const double* w, const double* dy,
                    double* dw, double* db, double* dx) {
  if (dx) {
    for (int i = 0; i < n_in; ++i) dx[i] = 0.0;
  }
  for (int o = 0; o < n_out; ++o) {
    db[o] += dy[o];
    for (int i = 0; i < n_in; ++i) {
      dw[o * n_in + i] += dy[o] * x[i];
      if (dx) dx[i] += dy[o] * w[o * n_in + i];
    }
  }
}

}  // namespace gyrocal::nn::reference
