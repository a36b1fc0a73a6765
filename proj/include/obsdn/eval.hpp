#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "obsdn/attack.hpp"
#include "obsdn/corpus.hpp"
#include "obsdn/metrics.hpp"
#include "obsdn/model.hpp"
#include "obsdn/training.hpp"

namespace obsdn {

enum class ColumnKind { gaussian, uniform, atk };

struct EvalColumn {
  ColumnKind kind = ColumnKind::gaussian;
  double level = 0.0;  // attack budget per pixel (rho / sqrt(m)); atk only

  // "gaussian", "uniform" or "atk-R" with R = level * 255.
  std::string name() const;
  static EvalColumn parse(const std::string& name);
  static EvalColumn atk(double level) { return {ColumnKind::atk, level}; }
};

struct EvalProtocol {
  std::string corpus_name = "synthetic";
  double eps_hat = 15.0 / 255.0;
  std::vector<EvalColumn> columns;
  // Template for attacked columns; rho is filled in per image.
  AttackConfig attack{0.0, 5, {}, 0.0, 1.0};
  std::size_t repeats = 3;
  std::size_t threads = 1;

  void validate() const;
};

// Constraint bookkeeping over every attack run inside one evaluation.
struct AttackAudit {
  std::size_t attacks = 0;
  double max_abs_mean = 0.0;        // |mean(pre_clip_delta)|
  double max_norm_ratio = 0.0;      // ||pre_clip_delta|| / rho (rho > 0)
  double max_post_clip_ratio = 0.0; // ||delta|| / rho (rho > 0)
  double max_energy_ratio = 0.0;    // ||(y - x) + delta|| / (eps_hat sqrt(m))
  std::size_t energy_violations = 0;
  std::size_t ascent_holds = 0;     // objective(delta*) >= objective(0)

  void merge(const AttackAudit& other);
};

struct EvalRow {
  std::string corpus;
  double eps_hat = 0.0;
  std::string column;
  double psnr_mean = 0.0;
  double psnr_std = 0.0;
  std::vector<double> repeat_means;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  AttackAudit audit;

  const EvalRow& row(const std::string& column) const;
  // corpus,eps_hat,column,psnr_mean,psnr_std
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
  std::string to_json() const;
  void write_json(const std::filesystem::path& path) const;
};

// Per image: corrupt (clip to the pixel range), optionally attack, denoise,
// PSNR against the clean image. Each repeat averages PSNR over images; the
// row reports mean and population std across repeats. Noise seeds depend on
// (seed, repeat, image) only, so all columns see the same base draws.
EvalReport evaluate(const ModelParams& params, const Corpus& corpus, const EvalProtocol& protocol,
                    std::uint64_t seed);

enum class SweepAxis { alpha, rho };

const char* axis_name(SweepAxis axis) noexcept;

struct SweepPoint {
  double value = 0.0;
  ModelParams params;
  EvalReport report;
};

struct SweepReport {
  SweepAxis axis = SweepAxis::alpha;
  std::vector<SweepPoint> points;

  // axis,value,corpus,eps_hat,column,psnr_mean,psnr_std
  void write_csv(std::ostream& os) const;
  void write_csv(const std::filesystem::path& path) const;
};

// One model per grid value (alpha, or training attack level for the rho
// axis), all from base.seed, each evaluated under `protocol`.
SweepReport ablation_sweep(const Corpus& train_corpus, const Corpus& eval_corpus, SweepAxis axis,
                           const std::vector<double>& grid, const TrainConfig& base, const EvalProtocol& protocol,
                           std::uint64_t eval_seed);

// Formatting shared by CSV writers: "inf" for +infinity.
std::string format_number(double v);

}  // namespace obsdn
