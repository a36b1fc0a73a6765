#include "obsdn/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>

#include "obsdn/error.hpp"
#include "obsdn/metrics.hpp"
#include "obsdn/noise.hpp"
#include "obsdn/parallel.hpp"
#include "obsdn/rng.hpp"

namespace obsdn {

const char* mode_name(TrainMode mode) noexcept {
  switch (mode) {
    case TrainMode::nt: return "nt";
    case TrainMode::vat: return "vat";
    case TrainMode::hat: return "hat";
  }
  return "?";
}

TrainMode parse_mode(const std::string& s) {
  if (s == "nt") return TrainMode::nt;
  if (s == "vat") return TrainMode::vat;
  if (s == "hat") return TrainMode::hat;
  throw ConfigError("mode", "expected nt, vat or hat, got '" + s + "'");
}

AttackConfig TrainAttack::for_patch(std::size_t m) const {
  AttackConfig cfg;
  cfg.rho = level * std::sqrt(static_cast<double>(m));
  cfg.iters = iters;
  cfg.step = step;
  return cfg;
}

void TrainConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be >= 0");
  if (!(eps >= 0.0 && eps <= 1.0)) throw ConfigError("eps", "must lie in [0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size", "must be >= 1");
  if (epochs < 1) throw ConfigError("epochs", "must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction", "must lie in [0, 1)");
  if (!(attack.level >= 0.0)) throw ConfigError("attack_level", "must be >= 0");
  if (attack.iters < 1) throw ConfigError("attack_iters", "must be >= 1");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  arch.validate();
}

Tensor adversarial_observation(const ModelParams& params, const TrainPair& pair, const LossSpec& spec) {
  const bool needs_attack = spec.mode == TrainMode::vat || (spec.mode == TrainMode::hat && spec.alpha > 0.0);
  if (!needs_attack) return pair.noisy;
  const auto res = obsatk(params, pair.clean, pair.noisy, spec.attack.for_patch(pair.noisy.size()));
  return pair.noisy + res.delta;
}

NodeId pair_loss(Graph& g, const ModelParams& params, const ParamNodes& nodes, const TrainPair& pair,
                 const Tensor& adversarial, const LossSpec& spec) {
  const NodeId x = g.leaf(pair.clean);
  if (spec.mode == TrainMode::vat) {
    const NodeId out = denoise(g, params, nodes, g.leaf(adversarial));
    return g.scale(g.sq_norm(g.sub(out, x)), 0.5);
  }
  // NT is HAT with alpha = 0; the zero-weight consistency term is not built.
  const double alpha = spec.mode == TrainMode::hat ? spec.alpha : 0.0;
  const double w_rec = 1.0 / (1.0 + alpha);
  const double w_con = alpha / (1.0 + alpha);
  const NodeId fy = denoise(g, params, nodes, g.leaf(pair.noisy));
  NodeId inner = g.scale(g.sq_norm(g.sub(fy, x)), w_rec);
  if (w_con > 0.0) {
    const NodeId fy_adv = denoise(g, params, nodes, g.leaf(adversarial));
    inner = g.add(inner, g.scale(g.sq_norm(g.sub(fy, fy_adv)), w_con));
  }
  return g.scale(inner, 0.5);
}

namespace {

void require_batch(std::span<const TrainPair> batch) {
  if (batch.empty()) throw ValueError("loss: empty batch");
  for (const auto& p : batch) require_same_shape(p.clean, p.noisy, "loss");
}

struct PairOutcome {
  double loss = 0.0;
  std::vector<Tensor> grads;
};

PairOutcome run_pair(const ModelParams& params, const TrainPair& pair, const LossSpec& spec, bool want_grad) {
  const Tensor adv = adversarial_observation(params, pair, spec);
  Graph g;
  const auto nodes = add_param_leaves(g, params);
  const NodeId loss = pair_loss(g, params, nodes, pair, adv, spec);
  PairOutcome out;
  out.loss = g.value(loss)[0];
  if (want_grad) out.grads = g.grad(loss, nodes.leaves);
  return out;
}

}  // namespace

LossGrad loss_and_grad(const ModelParams& params, std::span<const TrainPair> batch, const LossSpec& spec,
                       std::size_t threads) {
  require_batch(batch);
  std::vector<PairOutcome> per(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) { per[i] = run_pair(params, batch[i], spec, true); });

  LossGrad out;
  out.grads = std::move(per[0].grads);
  out.loss = per[0].loss;
  for (std::size_t i = 1; i < per.size(); ++i) {
    out.loss += per[i].loss;
    for (std::size_t k = 0; k < out.grads.size(); ++k) out.grads[k] += per[i].grads[k];
  }
  const double n = static_cast<double>(batch.size());
  out.loss /= n;
  for (auto& g : out.grads)
    for (auto& v : g.data()) v /= n;
  return out;
}

double batch_loss(const ModelParams& params, std::span<const TrainPair> batch, const LossSpec& spec) {
  require_batch(batch);
  double total = 0.0;
  for (const auto& p : batch) total += run_pair(params, p, spec, false).loss;
  return total / static_cast<double>(batch.size());
}

double nt_loss(const ModelParams& params, std::span<const TrainPair> batch) {
  return batch_loss(params, batch, LossSpec{TrainMode::nt, 0.0, {}});
}

double vat_loss(const ModelParams& params, std::span<const TrainPair> batch, const TrainAttack& attack) {
  return batch_loss(params, batch, LossSpec{TrainMode::vat, 0.0, attack});
}

double hat_loss(const ModelParams& params, std::span<const TrainPair> batch, const TrainAttack& attack,
                double alpha) {
  if (!(alpha >= 0.0)) throw ValueError("hat_loss: alpha must be >= 0");
  return batch_loss(params, batch, LossSpec{TrainMode::hat, alpha, attack});
}

HatTerms hat_terms(const ModelParams& params, const TrainPair& pair, const TrainAttack& attack) {
  const auto res = obsatk(params, pair.clean, pair.noisy, attack.for_patch(pair.noisy.size()));
  const Tensor fy = denoise(params, pair.noisy);
  const Tensor fy_adv = denoise(params, pair.noisy + res.delta);
  return {squared_norm(fy - pair.clean), squared_norm(fy - fy_adv)};
}

std::vector<TrainPair> make_pairs(const Corpus& patches, double eps, std::uint64_t seed) {
  std::vector<TrainPair> pairs;
  pairs.reserve(patches.size());
  const NoiseSpec spec = GaussianFamily{eps};
  for (std::size_t i = 0; i < patches.size(); ++i) {
    Rng rng(derive_seed(seed, seed_domain::worker, i));
    const Tensor& x = patches[i].clean;
    Tensor y = clip(x + sample_noise(spec, x.shape(), rng), 0.0, 1.0);
    pairs.push_back(TrainPair{x, std::move(y)});
  }
  return pairs;
}

namespace {

struct Adam {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t t = 0;
  std::vector<Tensor> m, v;

  explicit Adam(const ModelParams& params) {
    for (const Tensor* p : param_tensors(params)) {
      m.emplace_back(p->shape());
      v.emplace_back(p->shape());
    }
  }

  void step(ModelParams& params, const std::vector<Tensor>& grads, double lr) {
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    auto tensors = param_tensors(params);
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      auto p = tensors[k]->data();
      auto g = grads[k].data();
      auto mk = m[k].data();
      auto vk = v[k].data();
      for (std::size_t i = 0; i < p.size(); ++i) {
        mk[i] = beta1 * mk[i] + (1.0 - beta1) * g[i];
        vk[i] = beta2 * vk[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = mk[i] / c1;
        const double vhat = vk[i] / c2;
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    }
  }
};

double validation_psnr(const ModelParams& params, const std::vector<TrainPair>& val) {
  double total = 0.0;
  for (const auto& p : val) total += psnr(denoise(params, p.noisy), p.clean);
  return total / static_cast<double>(val.size());
}

}  // namespace

TrainResult train(const Corpus& corpus, const TrainConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw ValueError("train: empty corpus");
  for (const auto& p : corpus)
    if (p.clean.rank() != 3 || p.clean.dim(0) != cfg.arch.channels_in)
      throw ShapeError("train: patch " + shape_str(p.clean.shape()) + " does not match the architecture");

  // Hold out the tail of the corpus for validation.
  Corpus train_set = corpus;
  Corpus val_set;
  if (corpus.size() >= 2 && cfg.val_fraction > 0.0) {
    const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(corpus.size() * cfg.val_fraction)));
    val_set.assign(corpus.end() - static_cast<std::ptrdiff_t>(n_val), corpus.end());
    train_set.resize(corpus.size() - n_val);
  } else {
    val_set = corpus;
  }
  const auto val_pairs = make_pairs(val_set, cfg.eps, derive_seed(cfg.seed, seed_domain::val_noise));

  TrainResult result{init_model(cfg.arch, cfg.seed), {}};
  Adam adam(result.params);
  const LossSpec spec{cfg.mode, cfg.alpha, cfg.attack};

  const std::size_t steps_per_epoch = (train_set.size() + cfg.batch_size - 1) / cfg.batch_size;
  const double total_steps = static_cast<double>(steps_per_epoch * cfg.epochs);
  std::size_t global_step = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, seed_domain::shuffle, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle_rng.below(i)]);
    Corpus shuffled;
    shuffled.reserve(order.size());
    for (auto i : order) shuffled.push_back(train_set[i]);
    const auto pairs = make_pairs(shuffled, cfg.eps, derive_seed(cfg.seed, seed_domain::train_noise, epoch));

    double loss_sum = 0.0;
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::size_t lo = s * cfg.batch_size;
      const std::size_t hi = std::min(pairs.size(), lo + cfg.batch_size);
      const auto batch = std::span<const TrainPair>(pairs).subspan(lo, hi - lo);
      auto lg = loss_and_grad(result.params, batch, spec, cfg.threads);
      if (!std::isfinite(lg.loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", step " +
                           std::to_string(s + 1));
      const double lr =
          cfg.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(global_step) / total_steps));
      adam.step(result.params, lg.grads, lr);
      loss_sum += lg.loss;
      ++global_step;
    }

    const auto end = std::chrono::steady_clock::now();
    result.log.rows.push_back(TrainLogRow{epoch + 1, loss_sum / static_cast<double>(steps_per_epoch),
                                          validation_psnr(result.params, val_pairs),
                                          std::chrono::duration<double>(end - start).count()});
  }
  result.params.validate();
  return result;
}

void TrainLog::write_csv(std::ostream& os) const {
  os << "epoch,loss,psnr_val,seconds\n";
  os << std::setprecision(10);
  for (const auto& r : rows) os << r.epoch << ',' << r.loss << ',' << r.psnr_val << ',' << r.seconds << '\n';
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
}

}  // namespace obsdn
