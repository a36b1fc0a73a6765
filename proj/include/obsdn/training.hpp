#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "obsdn/attack.hpp"
#include "obsdn/corpus.hpp"
#include "obsdn/model.hpp"

namespace obsdn {

enum class TrainMode { nt, vat, hat };

const char* mode_name(TrainMode mode) noexcept;
TrainMode parse_mode(const std::string& s);

// Training-time adversary. The L2 budget scales with the patch:
// rho = level * sqrt(m).
struct TrainAttack {
  double level = 5.0 / 255.0;
  std::size_t iters = 1;
  StepRule step;

  AttackConfig for_patch(std::size_t m) const;
};

struct TrainConfig {
  TrainMode mode = TrainMode::nt;
  double eps = 25.0 / 255.0;
  double alpha = 1.0;
  TrainAttack attack;
  ArchConfig arch;
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  double val_fraction = 0.1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate() const;
};

struct TrainPair {
  Tensor clean;
  Tensor noisy;  // clean + noise, clipped to the pixel range
};

struct LossSpec {
  TrainMode mode = TrainMode::nt;
  double alpha = 0.0;
  TrainAttack attack;
};

// Mean over the batch of 1/2 ||f(y) - x||^2.
double nt_loss(const ModelParams& params, std::span<const TrainPair> batch);
// Mean over the batch of 1/2 ||f(y') - x||^2 with y' = y + delta* from the
// attack run against the current parameters.
double vat_loss(const ModelParams& params, std::span<const TrainPair> batch, const TrainAttack& attack);
// Mean over the batch of
//   1/2 (1/(1+a) ||f(y) - x||^2 + a/(1+a) ||f(y) - f(y')||^2).
double hat_loss(const ModelParams& params, std::span<const TrainPair> batch, const TrainAttack& attack,
                double alpha);

struct HatTerms {
  double reconstruction;  // ||f(y) - x||^2
  double consistency;     // ||f(y) - f(y')||^2
};
HatTerms hat_terms(const ModelParams& params, const TrainPair& pair, const TrainAttack& attack);

// Adversarial observation y + delta* for one pair (identity for NT).
Tensor adversarial_observation(const ModelParams& params, const TrainPair& pair, const LossSpec& spec);

// Per-pair loss graph. `adversarial` is y' (ignored for NT); it is treated as a
// constant, so gradients do not flow through the attack.
NodeId pair_loss(Graph& g, const ModelParams& params, const ParamNodes& nodes, const TrainPair& pair,
                 const Tensor& adversarial, const LossSpec& spec);

struct LossGrad {
  double loss = 0.0;
  std::vector<Tensor> grads;  // ordered like param_tensors()
};

// Batch loss and its gradient. Per-pair work may run on `threads` workers; the
// reduction is always in batch order.
LossGrad loss_and_grad(const ModelParams& params, std::span<const TrainPair> batch, const LossSpec& spec,
                       std::size_t threads = 1);
double batch_loss(const ModelParams& params, std::span<const TrainPair> batch, const LossSpec& spec);

struct TrainLogRow {
  std::size_t epoch = 0;
  double loss = 0.0;
  double psnr_val = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  // epoch,loss,psnr_val,seconds
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

// Adam (0.9, 0.999, 1e-8) with cosine learning-rate decay. Noise is redrawn
// from the Gaussian family every epoch.
TrainResult train(const Corpus& corpus, const TrainConfig& cfg);

// Builds noisy pairs for `patches` with sigma ~ U(0, eps), one derived seed per patch.
std::vector<TrainPair> make_pairs(const Corpus& patches, double eps, std::uint64_t seed);

}  // namespace obsdn
