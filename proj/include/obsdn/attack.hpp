#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "obsdn/model.hpp"
#include "obsdn/tensor.hpp"

namespace obsdn {

enum class StepKind { normalized_l2, raw };

struct StepRule {
  StepKind kind = StepKind::normalized_l2;
  // Unset means 2 * rho / iters.
  std::optional<double> eta;
};

struct AttackConfig {
  double rho = 0.0;  // absolute L2 budget; per-pixel level times sqrt(m)
  std::size_t iters = 5;
  StepRule step;
  double p_min = 0.0;
  double p_max = 1.0;

  double step_size() const;
  void validate() const;
};

struct AttackResult {
  Tensor delta;           // clip(y + pre_clip_delta, p_min, p_max) - y
  Tensor pre_clip_delta;  // zero-mean, norm <= rho
  std::vector<double> objective_trace;  // objective at the iterate entering each step
};

// ||denoise(y + delta) - x||^2
double adv_objective(const ModelParams& params, const Tensor& y, const Tensor& delta, const Tensor& x);

// Builds the objective as a graph over a leaf holding delta; used by the
// attack itself and by gradient checks.
NodeId adv_objective(Graph& g, const ModelParams& params, const Tensor& y, NodeId delta, const Tensor& x);

// Zero-mean L2-bounded PGD ascent on the reconstruction error.
AttackResult obsatk(const ModelParams& params, const Tensor& x, const Tensor& y, const AttackConfig& cfg);

// Base Gaussian sigma for an attacked evaluation cell: eps_hat - rho/sqrt(m).
double budget_split(double eps_hat, double rho_over_sqrt_m);

}  // namespace obsdn
