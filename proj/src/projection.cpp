#include "obsdn/projection.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "obsdn/error.hpp"

namespace obsdn {

PerturbationBudget PerturbationBudget::per_pixel(double level, std::size_t m) {
  PerturbationBudget b{level * std::sqrt(static_cast<double>(m)), m};
  b.validate();
  return b;
}

void PerturbationBudget::validate() const {
  if (!(rho >= 0.0)) throw ValueError("budget: rho must be >= 0");
  if (m < 1) throw ValueError("budget: m must be >= 1");
}

namespace {
void require_rho(double rho) {
  if (!(rho >= 0.0)) throw ValueError("projection: rho must be >= 0, got " + std::to_string(rho));
}
void require_nonempty(const Tensor& t) {
  if (t.empty()) throw ShapeError("projection: empty perturbation");
}
}  // namespace

Tensor project_zero_mean(const Tensor& delta) {
  require_nonempty(delta);
  const double mu = mean(delta);
  Tensor out = delta;
  for (auto& v : out.data()) v -= mu;
  return out;
}

Tensor project_l2_ball(const Tensor& delta, double rho) {
  require_rho(rho);
  require_nonempty(delta);
  const double norm = l2_norm(delta);
  if (norm <= rho) return delta;
  return (rho / norm) * delta;
}

Tensor project_feasible(const Tensor& delta, double rho) {
  require_rho(rho);
  return project_l2_ball(project_zero_mean(delta), rho);
}

namespace {

// Hyperplane projection z - (n.z / n.n) n for an explicit normal n.
Tensor onto_plane(const Tensor& z, const Tensor& normal, double normal_sq) {
  const double coef = dot(normal, z) / normal_sq;
  Tensor out = z;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= coef * normal[i];
  return out;
}

Tensor onto_ball(const Tensor& z, double rho) {
  const double norm = std::sqrt(dot(z, z));
  if (norm <= rho) return z;
  Tensor out = z;
  const double s = rho / norm;
  for (auto& v : out.data()) v *= s;
  return out;
}

double max_diff(const Tensor& a, const Tensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

DykstraResult dykstra(const Tensor& delta, double rho, const DykstraOptions& opts) {
  require_rho(rho);
  require_nonempty(delta);
  if (opts.max_iters < 1) throw ValueError("dykstra: iters must be >= 1");
  if (!(opts.tol > 0.0)) throw ValueError("dykstra: tol must be positive");

  const Tensor normal(delta.shape(), 1.0);
  const double normal_sq = static_cast<double>(delta.size());

  // Ball step first, then the plane.
  Tensor x = delta;
  Tensor p(delta.shape());
  Tensor q(delta.shape());
  const double scale = std::max(1.0, max_abs(delta));
  double step = 0.0;
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    const Tensor y = onto_ball(x + p, rho);
    p = (x + p) - y;
    const Tensor x_next = onto_plane(y + q, normal, normal_sq);
    q = (y + q) - x_next;
    step = max_diff(x_next, x);
    x = x_next;
    if (step < opts.tol * scale) return {std::move(x), it, step};
  }
  throw ConvergenceError("dykstra: no convergence after " + std::to_string(opts.max_iters) +
                             " iterations, last step " + fmt_g(step),
                         step);
}

Tensor dykstra_project(const Tensor& delta, double rho, std::size_t iters, double tol) {
  return dykstra(delta, rho, DykstraOptions{iters, tol}).point;
}

}  // namespace obsdn
