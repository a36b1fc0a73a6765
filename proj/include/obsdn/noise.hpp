#pragma once

#include <string>
#include <variant>

#include "obsdn/rng.hpp"
#include "obsdn/tensor.hpp"

namespace obsdn {

// All levels are in [0, 1] pixel units.
struct GaussianFixed {
  double sigma = 0.0;
};
// sigma ~ U(0, eps) drawn once per sample, then i.i.d. N(0, sigma^2).
struct GaussianFamily {
  double eps = 0.0;
};
// i.i.d. U(-sqrt(3) eps_hat, sqrt(3) eps_hat), i.e. variance eps_hat^2.
struct UniformNoise {
  double eps_hat = 0.0;
};

using NoiseSpec = std::variant<GaussianFixed, GaussianFamily, UniformNoise>;

void validate(const NoiseSpec& spec);
std::string describe(const NoiseSpec& spec);

struct NoiseDraw {
  Tensor noise;
  // Gaussian standard deviation actually used; NaN for uniform noise.
  double sigma;
};

NoiseDraw draw_noise(const NoiseSpec& spec, const Shape& shape, Rng& rng);
Tensor sample_noise(const NoiseSpec& spec, const Shape& shape, Rng& rng);

// ||v||^2 / m.
double energy_density(const Tensor& v);

}  // namespace obsdn
