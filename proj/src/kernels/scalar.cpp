// Reference kernels: direct textbook loops, no reordering tricks.

#include <cstddef>

#include "obsdn/kernels.hpp"

namespace obsdn::kernels {
namespace {

void conv2d_forward(const ConvDims& d, const double* in, const double* weight, const double* bias, double* out) {
  const long p = static_cast<long>(d.pad());
  const long h = static_cast<long>(d.height);
  const long w = static_cast<long>(d.width);
  const long k = static_cast<long>(d.k);
  for (std::size_t co = 0; co < d.c_out; ++co) {
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        double s = bias ? bias[co] : 0.0;
        for (std::size_t ci = 0; ci < d.c_in; ++ci) {
          const double* plane = in + ci * d.plane();
          const double* kern = weight + (co * d.c_in + ci) * d.k * d.k;
          for (long ky = 0; ky < k; ++ky) {
            const long iy = y + ky - p;
            if (iy < 0 || iy >= h) continue;
            for (long kx = 0; kx < k; ++kx) {
              const long ix = x + kx - p;
              if (ix < 0 || ix >= w) continue;
              s += kern[ky * k + kx] * plane[iy * w + ix];
            }
          }
        }
        out[co * d.plane() + y * w + x] = s;
      }
    }
  }
}

void conv2d_backward_input(const ConvDims& d, const double* grad_out, const double* weight, double* grad_in) {
  const long p = static_cast<long>(d.pad());
  const long h = static_cast<long>(d.height);
  const long w = static_cast<long>(d.width);
  const long k = static_cast<long>(d.k);
  for (std::size_t ci = 0; ci < d.c_in; ++ci) {
    for (long iy = 0; iy < h; ++iy) {
      for (long ix = 0; ix < w; ++ix) {
        double s = 0.0;
        for (std::size_t co = 0; co < d.c_out; ++co) {
          const double* g = grad_out + co * d.plane();
          const double* kern = weight + (co * d.c_in + ci) * d.k * d.k;
          for (long ky = 0; ky < k; ++ky) {
            const long y = iy - ky + p;
            if (y < 0 || y >= h) continue;
            for (long kx = 0; kx < k; ++kx) {
              const long x = ix - kx + p;
              if (x < 0 || x >= w) continue;
              s += kern[ky * k + kx] * g[y * w + x];
            }
          }
        }
        grad_in[ci * d.plane() + iy * w + ix] += s;
      }
    }
  }
}

void conv2d_backward_weight(const ConvDims& d, const double* grad_out, const double* in, double* grad_weight,
                            double* grad_bias) {
  const long p = static_cast<long>(d.pad());
  const long h = static_cast<long>(d.height);
  const long w = static_cast<long>(d.width);
  const long k = static_cast<long>(d.k);
  for (std::size_t co = 0; co < d.c_out; ++co) {
    const double* g = grad_out + co * d.plane();
    if (grad_bias) {
      double s = 0.0;
      for (std::size_t i = 0; i < d.plane(); ++i) s += g[i];
      grad_bias[co] += s;
    }
    for (std::size_t ci = 0; ci < d.c_in; ++ci) {
      const double* plane = in + ci * d.plane();
      double* gk = grad_weight + (co * d.c_in + ci) * d.k * d.k;
      for (long ky = 0; ky < k; ++ky) {
        for (long kx = 0; kx < k; ++kx) {
          double s = 0.0;
          for (long y = 0; y < h; ++y) {
            const long iy = y + ky - p;
            if (iy < 0 || iy >= h) continue;
            for (long x = 0; x < w; ++x) {
              const long ix = x + kx - p;
              if (ix < 0 || ix >= w) continue;
              s += g[y * w + x] * plane[iy * w + ix];
            }
          }
          gk[ky * k + kx] += s;
        }
      }
    }
  }
}

double dot(std::size_t n, const double* a, const double* b) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void relu_forward(std::size_t n, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* grad_out, double* grad_in) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > 0.0) grad_in[i] += grad_out[i];
}

constexpr KernelTable kTable{
    "scalar", conv2d_forward, conv2d_backward_input, conv2d_backward_weight, dot, axpy, relu_forward,
    relu_backward,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kTable; }

}  // namespace obsdn::kernels
