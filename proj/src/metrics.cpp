#include "obsdn/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "obsdn/error.hpp"

namespace obsdn {

double mse(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw ShapeError("psnr: empty tensors");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  if (!(peak > 0.0)) throw ValueError("psnr: peak must be positive, got " + std::to_string(peak));
  const double e = mse(a, b);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / e);
}

}  // namespace obsdn
