#pragma once

#include "obsdn/tensor.hpp"

namespace obsdn {

// 10 log10(peak^2 / MSE). Identical inputs give +infinity.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

double mse(const Tensor& a, const Tensor& b);

}  // namespace obsdn
