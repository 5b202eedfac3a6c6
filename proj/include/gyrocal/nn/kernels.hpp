#pragma once

// Layer kernels on raw row-major buffers. `fast` is the production path
// (im2col + Eigen GEMM); `reference` is a direct loop transcription kept as a
// test oracle and benchmark baseline. Both share one signature set.

#include <cstddef>

namespace gyrocal::nn {

struct ConvDims {
  int in_channels = 0;
  int length = 0;
  int out_channels = 0;
  int kernel = 0;
  int stride = 1;

  int out_length() const noexcept { return (length - kernel) / stride + 1; }
  std::size_t col_size() const noexcept {
    return static_cast<std::size_t>(in_channels) * kernel * out_length();
  }
};

struct PoolDims {
  int channels = 0;
  int length = 0;
  int window = 0;
  int stride = 0;

  int out_length() const noexcept { return (length - window) / stride + 1; }
};

#define GYROCAL_KERNEL_DECLS                                                                   \
  /* out[o,t] = b[o] + sum_{c,j} w[o,c,j] * in[c, t*stride + j]; col is scratch (col_size) */ \
  void conv1d_forward(const ConvDims& d, const double* in, const double* w, const double* b,\
                      double* out, double* col);                                            \
  /* Accumulates dw, db; overwrites din when non-null. col must hold the forward im2col. */ \
  void conv1d_backward(const ConvDims& d, const double* in, const double* w,                \
                       const double* dout, double* dw, double* db, double* din,             \
                       const double* col, double* dcol);                                    \
  /* Ties resolve to the earliest index. */                                                 \
  void maxpool_forward(const PoolDims& d, const double* in, double* out, int* argmax);      \
  void maxpool_backward(const PoolDims& d, const double* dout, const int* argmax,           \
                        double* din);                                                        \
  void dense_forward(int n_in, int n_out, const double* x, const double* w,                 \
                     const double* b, double* y);                                           \
  void dense_backward(int n_in, int n_out, const double* x, const double* w,                \
                      const double* dy, double* dw, double* db, double* dx);

namespace fast {
GYROCAL_KERNEL_DECLS

// dx = w^T dy.
void dense_input_grad(int n_in, int n_out, const double* w, const double* dy, double* dx);
// dw += sum_s dy_s x_s^T for `batch` stacked rows x (batch x n_in) and dy (batch x n_out).
void dense_weight_grad_batch(int n_in, int n_out, std::size_t batch, const double* x, const double* dy,
                             double* dw);
}

namespace reference {
GYROCAL_KERNEL_DECLS
}

#undef GYROCAL_KERNEL_DECLS

enum class Backend { Fast, Reference };

}  // namespace gyrocal::nn
