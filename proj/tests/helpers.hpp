#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

#include "obsdn/rng.hpp"
#include "obsdn/tensor.hpp"

namespace obsdn::testing {

inline Tensor random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_rel_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]) / std::max(1.0, std::abs(a[i])));
  return m;
}

inline bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

// Direct-summation convolution used as an independent oracle.
inline double conv_at(const Tensor& in, const Tensor& k, std::size_t co, std::size_t y, std::size_t x) {
  const long p = static_cast<long>(k.dim(2) / 2);
  double s = 0.0;
  for (std::size_t ci = 0; ci < in.dim(0); ++ci)
    for (long a = 0; a < static_cast<long>(k.dim(2)); ++a)
      for (long b = 0; b < static_cast<long>(k.dim(3)); ++b) {
        const long iy = static_cast<long>(y) + a - p;
        const long ix = static_cast<long>(x) + b - p;
        if (iy < 0 || ix < 0 || iy >= static_cast<long>(in.dim(1)) || ix >= static_cast<long>(in.dim(2))) continue;
        s += k[((co * k.dim(1) + ci) * k.dim(2) + a) * k.dim(3) + b] * in.at(ci, iy, ix);
      }
  return s;
}

}  // namespace obsdn::testing
