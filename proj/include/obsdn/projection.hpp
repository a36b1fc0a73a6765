#pragma once

#include <cstddef>

#include "obsdn/tensor.hpp"

namespace obsdn {

// Tolerances used by every projection check in the toolkit.
namespace projection_tol {
inline constexpr double mean = 1e-12;     // |mean(out)| <= mean * max(1, ||delta||_inf)
inline constexpr double radius = 1e-12;   // ||out|| <= rho * (1 + radius)
inline constexpr double oracle = 1e-8;    // two-step vs Dykstra, infinity norm
}  // namespace projection_tol

struct PerturbationBudget {
  double rho = 0.0;
  std::size_t m = 1;

  // rho expressed per pixel, i.e. (level) * sqrt(m).
  static PerturbationBudget per_pixel(double level, std::size_t m);
  void validate() const;
};

// delta - mean(delta) * 1: the Euclidean projection onto {z : sum(z) = 0}.
Tensor project_zero_mean(const Tensor& delta);

// min(rho / ||delta||, 1) * delta.
Tensor project_l2_ball(const Tensor& delta, double rho);

// Zero-mean projection followed by the ball projection. For this pair of sets
// the composition is the exact projection onto their intersection.
Tensor project_feasible(const Tensor& delta, double rho);

struct DykstraOptions {
  std::size_t max_iters = 10000;
  double tol = 1e-12;
};

struct DykstraResult {
  Tensor point;
  std::size_t iterations = 0;
  double last_step = 0.0;
};

// Dykstra's alternating projections between the ball and the hyperplane with
// correction terms. Converges to the projection onto the intersection for
// any closed convex pair. ConvergenceError carries the last step size.
DykstraResult dykstra(const Tensor& delta, double rho, const DykstraOptions& opts = {});
Tensor dykstra_project(const Tensor& delta, double rho, std::size_t iters = 10000, double tol = 1e-12);

}  // namespace obsdn
