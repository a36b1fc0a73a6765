// AVX2 + FMA kernels. This translation unit is compiled with -mavx2 -mfma and
// must only be entered after a CPUID check (see dispatch.cpp).

#include <immintrin.h>

#include <algorithm>
#include <cstddef>
#include <vector>

#include "obsdn/kernels.hpp"

namespace obsdn::kernels {
namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Copies C×H×W planes into a zero border of width p.
std::vector<double> pad_planes(const double* in, std::size_t c, std::size_t h, std::size_t w, std::size_t p) {
  const std::size_t pw = w + 2 * p;
  const std::size_t ph = h + 2 * p;
  std::vector<double> out(c * ph * pw, 0.0);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < h; ++y)
      std::copy_n(in + (ci * h + y) * w, w, out.data() + (ci * ph + y + p) * pw + p);
  return out;
}

// Register-blocked forward pass over CB output channels at once.
template <std::size_t CB>
void forward_block(const ConvDims& d, const double* padded, const double* weight, const double* bias,
                   std::size_t co0, double* out) {
  const std::size_t k = d.k;
  const std::size_t kk = k * k;
  const std::size_t w = d.width;
  const std::size_t pw = w + 2 * d.pad();
  const std::size_t ph = d.height + 2 * d.pad();
  const std::size_t pplane = ph * pw;

  double b[CB];
  for (std::size_t j = 0; j < CB; ++j) b[j] = bias ? bias[co0 + j] : 0.0;
  const double* wbase[CB];
  for (std::size_t j = 0; j < CB; ++j) wbase[j] = weight + (co0 + j) * d.c_in * kk;

  for (std::size_t y = 0; y < d.height; ++y) {
    std::size_t x = 0;
    for (; x + 8 <= w; x += 8) {
      __m256d acc[CB][2];
      for (std::size_t j = 0; j < CB; ++j) acc[j][0] = acc[j][1] = _mm256_set1_pd(b[j]);
      for (std::size_t ci = 0; ci < d.c_in; ++ci) {
        const double* src = padded + ci * pplane + y * pw + x;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const double* s = src + ky * pw + kx;
            const __m256d v0 = _mm256_loadu_pd(s);
            const __m256d v1 = _mm256_loadu_pd(s + 4);
            const std::size_t widx = ci * kk + ky * k + kx;
            for (std::size_t j = 0; j < CB; ++j) {
              const __m256d wv = _mm256_broadcast_sd(wbase[j] + widx);
              acc[j][0] = _mm256_fmadd_pd(wv, v0, acc[j][0]);
              acc[j][1] = _mm256_fmadd_pd(wv, v1, acc[j][1]);
            }
          }
        }
      }
      for (std::size_t j = 0; j < CB; ++j) {
        double* o = out + (co0 + j) * d.plane() + y * w + x;
        _mm256_storeu_pd(o, acc[j][0]);
        _mm256_storeu_pd(o + 4, acc[j][1]);
      }
    }
    for (; x + 4 <= w; x += 4) {
      __m256d acc[CB];
      for (std::size_t j = 0; j < CB; ++j) acc[j] = _mm256_set1_pd(b[j]);
      for (std::size_t ci = 0; ci < d.c_in; ++ci) {
        const double* src = padded + ci * pplane + y * pw + x;
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const __m256d v = _mm256_loadu_pd(src + ky * pw + kx);
            const std::size_t widx = ci * kk + ky * k + kx;
            for (std::size_t j = 0; j < CB; ++j)
              acc[j] = _mm256_fmadd_pd(_mm256_broadcast_sd(wbase[j] + widx), v, acc[j]);
          }
        }
      }
      for (std::size_t j = 0; j < CB; ++j) _mm256_storeu_pd(out + (co0 + j) * d.plane() + y * w + x, acc[j]);
    }
    for (; x < w; ++x) {
      for (std::size_t j = 0; j < CB; ++j) {
        double s = b[j];
        for (std::size_t ci = 0; ci < d.c_in; ++ci) {
          const double* src = padded + ci * pplane + y * pw + x;
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) s += wbase[j][ci * kk + ky * k + kx] * src[ky * pw + kx];
        }
        out[(co0 + j) * d.plane() + y * w + x] = s;
      }
    }
  }
}

void conv2d_forward(const ConvDims& d, const double* in, const double* weight, const double* bias, double* out) {
  const auto padded = pad_planes(in, d.c_in, d.height, d.width, d.pad());
  std::size_t co = 0;
  for (; co + 4 <= d.c_out; co += 4) forward_block<4>(d, padded.data(), weight, bias, co, out);
  for (; co < d.c_out; ++co) forward_block<1>(d, padded.data(), weight, bias, co, out);
}

// The input adjoint is a forward convolution of grad_out with the
// channel-transposed, spatially flipped kernel.
void conv2d_backward_input(const ConvDims& d, const double* grad_out, const double* weight, double* grad_in) {
  const std::size_t k = d.k;
  const std::size_t kk = k * k;
  std::vector<double> flipped(d.weight_size());
  for (std::size_t co = 0; co < d.c_out; ++co)
    for (std::size_t ci = 0; ci < d.c_in; ++ci)
      for (std::size_t ky = 0; ky < k; ++ky)
        for (std::size_t kx = 0; kx < k; ++kx)
          flipped[(ci * d.c_out + co) * kk + (k - 1 - ky) * k + (k - 1 - kx)] =
              weight[(co * d.c_in + ci) * kk + ky * k + kx];

  ConvDims t = d;
  t.c_in = d.c_out;
  t.c_out = d.c_in;
  std::vector<double> tmp(d.c_in * d.plane());
  conv2d_forward(t, grad_out, flipped.data(), nullptr, tmp.data());

  std::size_t i = 0;
  const std::size_t n = tmp.size();
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(grad_in + i, _mm256_add_pd(_mm256_loadu_pd(grad_in + i), _mm256_loadu_pd(tmp.data() + i)));
  for (; i < n; ++i) grad_in[i] += tmp[i];
}

template <std::size_t K>
void backward_weight_fixed(const ConvDims& d, const double* grad_out, const double* padded, double* grad_weight) {
  constexpr std::size_t kk = K * K;
  const std::size_t w = d.width;
  const std::size_t pw = w + 2 * d.pad();
  const std::size_t pplane = (d.height + 2 * d.pad()) * pw;
  for (std::size_t co = 0; co < d.c_out; ++co) {
    const double* g = grad_out + co * d.plane();
    for (std::size_t ci = 0; ci < d.c_in; ++ci) {
      const double* src = padded + ci * pplane;
      __m256d acc[kk];
      double tail[kk];
      for (std::size_t t = 0; t < kk; ++t) {
        acc[t] = _mm256_setzero_pd();
        tail[t] = 0.0;
      }
      for (std::size_t y = 0; y < d.height; ++y) {
        const double* grow = g + y * w;
        std::size_t x = 0;
        for (; x + 4 <= w; x += 4) {
          const __m256d gv = _mm256_loadu_pd(grow + x);
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx)
              acc[ky * K + kx] =
                  _mm256_fmadd_pd(gv, _mm256_loadu_pd(src + (y + ky) * pw + x + kx), acc[ky * K + kx]);
        }
        for (; x < w; ++x)
          for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx) tail[ky * K + kx] += grow[x] * src[(y + ky) * pw + x + kx];
      }
      double* gk = grad_weight + (co * d.c_in + ci) * kk;
      for (std::size_t t = 0; t < kk; ++t) gk[t] += hsum(acc[t]) + tail[t];
    }
  }
}

void conv2d_backward_weight(const ConvDims& d, const double* grad_out, const double* in, double* grad_weight,
                            double* grad_bias) {
  if (d.k != 3 && d.k != 5) {
    scalar_table().conv2d_backward_weight(d, grad_out, in, grad_weight, grad_bias);
    return;
  }
  const auto padded = pad_planes(in, d.c_in, d.height, d.width, d.pad());
  if (d.k == 3)
    backward_weight_fixed<3>(d, grad_out, padded.data(), grad_weight);
  else
    backward_weight_fixed<5>(d, grad_out, padded.data(), grad_weight);
  if (grad_bias) {
    for (std::size_t co = 0; co < d.c_out; ++co) {
      const double* g = grad_out + co * d.plane();
      __m256d acc = _mm256_setzero_pd();
      std::size_t i = 0;
      for (; i + 4 <= d.plane(); i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(g + i));
      double s = hsum(acc);
      for (; i < d.plane(); ++i) s += g[i];
      grad_bias[co] += s;
    }
  }
}

double dot(std::size_t n, const double* a, const double* b) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += a * x[i];
}

void relu_forward(std::size_t n, const double* x, double* y) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(std::size_t n, const double* x, const double* grad_out, double* grad_in) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
    const __m256d g = _mm256_and_pd(mask, _mm256_loadu_pd(grad_out + i));
    _mm256_storeu_pd(grad_in + i, _mm256_add_pd(_mm256_loadu_pd(grad_in + i), g));
  }
  for (; i < n; ++i)
    if (x[i] > 0.0) grad_in[i] += grad_out[i];
}

constexpr KernelTable kTable{
    "avx2", conv2d_forward, conv2d_backward_input, conv2d_backward_weight, dot, axpy, relu_forward,
    relu_backward,
};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kTable; }

}  // namespace obsdn::kernels
