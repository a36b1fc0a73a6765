#include "obsdn/attack.hpp"

#include <cmath>
#include <string>

#include "obsdn/error.hpp"
#include "obsdn/projection.hpp"

namespace obsdn {

double AttackConfig::step_size() const {
  if (step.eta) return *step.eta;
  return 2.0 * rho / static_cast<double>(iters);
}

void AttackConfig::validate() const {
  if (!(rho >= 0.0)) throw ValueError("attack: rho must be >= 0");
  if (iters < 1) throw ValueError("attack: iters must be >= 1");
  if (!(p_min < p_max)) throw ValueError("attack: p_min must be < p_max");
  if (step.eta && !(*step.eta >= 0.0)) throw ValueError("attack: step size must be >= 0");
}

NodeId adv_objective(Graph& g, const ModelParams& params, const Tensor& y, NodeId delta, const Tensor& x) {
  require_same_shape(y, g.value(delta), "adv_objective");
  require_same_shape(y, x, "adv_objective");
  const auto pn = add_param_leaves(g, params);
  const NodeId input = g.add(g.leaf(y), delta);
  const NodeId out = denoise(g, params, pn, input);
  return g.sq_norm(g.sub(out, g.leaf(x)));
}

double adv_objective(const ModelParams& params, const Tensor& y, const Tensor& delta, const Tensor& x) {
  require_same_shape(y, delta, "adv_objective");
  require_same_shape(y, x, "adv_objective");
  const Tensor out = denoise(params, y + delta);
  return squared_norm(out - x);
}

AttackResult obsatk(const ModelParams& params, const Tensor& x, const Tensor& y, const AttackConfig& cfg) {
  cfg.validate();
  require_same_shape(x, y, "obsatk");
  for (double v : y.data())
    if (!(v >= cfg.p_min && v <= cfg.p_max))
      throw ValueError("obsatk: observation has a pixel outside [p_min, p_max]: " + std::to_string(v));

  const double eta = cfg.step_size();
  AttackResult res;
  res.objective_trace.reserve(cfg.iters);
  Tensor delta(y.shape());

  for (std::size_t t = 0; t < cfg.iters; ++t) {
    Graph g;
    const NodeId leaf = g.leaf(delta);
    const NodeId loss = adv_objective(g, params, y, leaf, x);
    const double value = g.value(loss)[0];
    if (!std::isfinite(value))
      throw NumericError("obsatk: non-finite objective at iteration " + std::to_string(t + 1));
    res.objective_trace.push_back(value);

    const NodeId wrt[] = {leaf};
    const Tensor grad = g.grad(loss, wrt).front();
    double scale = eta;
    if (cfg.step.kind == StepKind::normalized_l2) {
      const double gn = l2_norm(grad);
      scale = gn > 0.0 ? eta / gn : 0.0;
    }
    delta += scale * grad;
    delta = project_l2_ball(project_zero_mean(delta), cfg.rho);
  }

  res.pre_clip_delta = delta;
  res.delta = clip(y + delta, cfg.p_min, cfg.p_max) - y;
  return res;
}

double budget_split(double eps_hat, double rho_over_sqrt_m) {
  if (!(rho_over_sqrt_m >= 0.0)) throw ValueError("budget_split: attack level must be >= 0");
  if (rho_over_sqrt_m > eps_hat)
    throw ValueError("budget_split: attack level " + std::to_string(rho_over_sqrt_m) + " exceeds eps_hat " +
                     std::to_string(eps_hat));
  return eps_hat - rho_over_sqrt_m;
}

}  // namespace obsdn
