#include "obsdn/noise.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "obsdn/error.hpp"

namespace obsdn {
namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void fill_gaussian(Tensor& t, double sigma, Rng& rng) {
  for (auto& v : t.data()) v = sigma * rng.normal();
}
}  // namespace

void validate(const NoiseSpec& spec) {
  std::visit(overloaded{
                 [](const GaussianFixed& g) {
                   if (!(g.sigma >= 0.0)) throw ValueError("noise: sigma must be >= 0");
                 },
                 [](const GaussianFamily& g) {
                   if (!(g.eps >= 0.0)) throw ValueError("noise: eps must be >= 0");
                 },
                 [](const UniformNoise& u) {
                   if (!(u.eps_hat >= 0.0)) throw ValueError("noise: eps_hat must be >= 0");
                 },
             },
             spec);
}

std::string describe(const NoiseSpec& spec) {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const GaussianFixed& g) { os << "gaussian_fixed(" << g.sigma << ")"; },
                 [&](const GaussianFamily& g) { os << "gaussian_family(" << g.eps << ")"; },
                 [&](const UniformNoise& u) { os << "uniform(" << u.eps_hat << ")"; },
             },
             spec);
  return os.str();
}

NoiseDraw draw_noise(const NoiseSpec& spec, const Shape& shape, Rng& rng) {
  validate(spec);
  Tensor t(shape);
  double sigma = std::numeric_limits<double>::quiet_NaN();
  std::visit(overloaded{
                 [&](const GaussianFixed& g) {
                   sigma = g.sigma;
                   fill_gaussian(t, sigma, rng);
                 },
                 [&](const GaussianFamily& g) {
                   sigma = rng.uniform(0.0, g.eps);
                   fill_gaussian(t, sigma, rng);
                 },
                 [&](const UniformNoise& u) {
                   const double a = std::sqrt(3.0) * u.eps_hat;
                   for (auto& v : t.data()) v = rng.uniform(-a, a);
                 },
             },
             spec);
  return {std::move(t), sigma};
}

Tensor sample_noise(const NoiseSpec& spec, const Shape& shape, Rng& rng) {
  return draw_noise(spec, shape, rng).noise;
}

double energy_density(const Tensor& v) {
  if (v.empty()) throw ShapeError("energy_density: empty tensor");
  return squared_norm(v) / static_cast<double>(v.size());
}

}  // namespace obsdn
