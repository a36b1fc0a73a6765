#include "obsdn/eval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <limits>

#include "obsdn/error.hpp"
#include "obsdn/noise.hpp"
#include "obsdn/parallel.hpp"
#include "obsdn/rng.hpp"

namespace obsdn {

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string EvalColumn::name() const {
  switch (kind) {
    case ColumnKind::gaussian: return "gaussian";
    case ColumnKind::uniform: return "uniform";
    case ColumnKind::atk: break;
  }
  const double r = level * 255.0;
  const double rounded = std::round(r);
  char buf[64];
  if (std::abs(r - rounded) < 1e-9)
    std::snprintf(buf, sizeof buf, "atk-%lld", static_cast<long long>(rounded));
  else
    std::snprintf(buf, sizeof buf, "atk-%g", r);
  return buf;
}

EvalColumn EvalColumn::parse(const std::string& name) {
  if (name == "gaussian") return {ColumnKind::gaussian, 0.0};
  if (name == "uniform") return {ColumnKind::uniform, 0.0};
  if (name.rfind("atk-", 0) == 0) {
    const std::string num = name.substr(4);
    std::size_t used = 0;
    double r = 0.0;
    try {
      r = std::stod(num, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == num.size() && !num.empty() && r >= 0.0 && std::isfinite(r)) return atk(r / 255.0);
  }
  throw ConfigError("columns", "unknown column '" + name + "' (expected gaussian, uniform or atk-R)");
}

void EvalProtocol::validate() const {
  if (!(eps_hat >= 0.0)) throw ConfigError("eps_hat", "must be >= 0");
  if (columns.empty()) throw ConfigError("columns", "at least one column is required");
  if (repeats < 1) throw ConfigError("repeats", "must be >= 1");
  if (threads < 1) throw ConfigError("threads", "must be >= 1");
  for (const auto& c : columns)
    if (c.kind == ColumnKind::atk && c.level > eps_hat)
      throw ConfigError("columns", c.name() + " exceeds eps_hat");
  attack.validate();
}

void AttackAudit::merge(const AttackAudit& o) {
  attacks += o.attacks;
  max_abs_mean = std::max(max_abs_mean, o.max_abs_mean);
  max_norm_ratio = std::max(max_norm_ratio, o.max_norm_ratio);
  max_post_clip_ratio = std::max(max_post_clip_ratio, o.max_post_clip_ratio);
  max_energy_ratio = std::max(max_energy_ratio, o.max_energy_ratio);
  energy_violations += o.energy_violations;
  ascent_holds += o.ascent_holds;
}

const EvalRow& EvalReport::row(const std::string& column) const {
  for (const auto& r : rows)
    if (r.column == column) return r;
  throw ValueError("report has no column " + column);
}

namespace {

struct CellResult {
  double psnr = 0.0;
  AttackAudit audit;
};

CellResult run_image(const ModelParams& params, const Tensor& x, const EvalColumn& col, const EvalProtocol& proto,
                     Rng rng) {
  NoiseSpec spec = GaussianFixed{proto.eps_hat};
  if (col.kind == ColumnKind::uniform) spec = UniformNoise{proto.eps_hat};
  if (col.kind == ColumnKind::atk) spec = GaussianFixed{budget_split(proto.eps_hat, col.level)};
  const Tensor y = clip(x + sample_noise(spec, x.shape(), rng), proto.attack.p_min, proto.attack.p_max);

  CellResult out;
  if (col.kind != ColumnKind::atk) {
    out.psnr = psnr(denoise(params, y), x);
    return out;
  }

  const double sqrt_m = std::sqrt(static_cast<double>(x.size()));
  AttackConfig cfg = proto.attack;
  cfg.rho = col.level * sqrt_m;
  const auto res = obsatk(params, x, y, cfg);
  const Tensor y_adv = y + res.delta;
  out.psnr = psnr(denoise(params, y_adv), x);

  auto& a = out.audit;
  a.attacks = 1;
  a.max_abs_mean = std::abs(mean(res.pre_clip_delta));
  if (cfg.rho > 0.0) {
    a.max_norm_ratio = l2_norm(res.pre_clip_delta) / cfg.rho;
    a.max_post_clip_ratio = l2_norm(res.delta) / cfg.rho;
  }
  const double total = l2_norm(y_adv - x);
  const double bound = proto.eps_hat * sqrt_m;
  a.max_energy_ratio = bound > 0.0 ? total / bound : (total > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  if (total > bound * (1.0 + 1e-12)) a.energy_violations = 1;
  const double base = adv_objective(params, y, Tensor(y.shape()), x);
  const double attacked = adv_objective(params, y, res.delta, x);
  if (attacked >= base) a.ascent_holds = 1;
  return out;
}

}  // namespace

EvalReport evaluate(const ModelParams& params, const Corpus& corpus, const EvalProtocol& protocol,
                    std::uint64_t seed) {
  protocol.validate();
  if (corpus.empty()) throw ValueError("evaluate: empty corpus");

  EvalReport report;
  for (const auto& col : protocol.columns) {
    EvalRow row{protocol.corpus_name, protocol.eps_hat, col.name(), 0.0, 0.0, {}};
    for (std::size_t r = 0; r < protocol.repeats; ++r) {
      const std::uint64_t repeat_seed = derive_seed(seed, seed_domain::eval_noise, r);
      std::vector<CellResult> cells(corpus.size());
      parallel_for(corpus.size(), protocol.threads, [&](std::size_t i) {
        cells[i] = run_image(params, corpus[i].clean, col, protocol, Rng(derive_seed(repeat_seed, seed_domain::worker, i)));
      });
      double total = 0.0;
      for (const auto& c : cells) {
        total += c.psnr;
        report.audit.merge(c.audit);
      }
      row.repeat_means.push_back(total / static_cast<double>(cells.size()));
    }
    double m = 0.0;
    for (double v : row.repeat_means) m += v;
    m /= static_cast<double>(row.repeat_means.size());
    double var = 0.0;
    if (std::isfinite(m))
      for (double v : row.repeat_means) var += (v - m) * (v - m);
    row.psnr_mean = m;
    row.psnr_std = std::sqrt(var / static_cast<double>(row.repeat_means.size()));
    report.rows.push_back(std::move(row));
  }
  return report;
}

void EvalReport::write_csv(std::ostream& os) const {
  os << "corpus,eps_hat,column,psnr_mean,psnr_std\n";
  for (const auto& r : rows)
    os << r.corpus << ',' << format_number(r.eps_hat) << ',' << r.column << ',' << format_number(r.psnr_mean) << ','
       << format_number(r.psnr_std) << '\n';
}

void EvalReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["corpus"] = r.corpus;
    row["eps_hat"] = r.eps_hat;
    row["column"] = r.column;
    const bool exact = std::isinf(r.psnr_mean);
    row["psnr_mean"] = exact ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.psnr_mean);
    row["psnr_std"] = exact ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.psnr_std);
    row["exact"] = exact;
    j["rows"].push_back(row);
  }
  auto& a = j["audit"];
  a["attacks"] = audit.attacks;
  a["max_abs_mean"] = audit.max_abs_mean;
  a["max_norm_ratio"] = audit.max_norm_ratio;
  a["max_post_clip_ratio"] = audit.max_post_clip_ratio;
  a["max_energy_ratio"] = audit.max_energy_ratio;
  a["energy_violations"] = audit.energy_violations;
  a["ascent_holds"] = audit.ascent_holds;
  return j.dump(2) + "\n";
}

void EvalReport::write_json(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json();
}

const char* axis_name(SweepAxis axis) noexcept { return axis == SweepAxis::alpha ? "alpha" : "rho"; }

SweepReport ablation_sweep(const Corpus& train_corpus, const Corpus& eval_corpus, SweepAxis axis,
                           const std::vector<double>& grid, const TrainConfig& base, const EvalProtocol& protocol,
                           std::uint64_t eval_seed) {
  if (grid.empty()) throw ConfigError("grid", "sweep grid is empty");
  SweepReport out{axis, {}};
  for (double v : grid) {
    TrainConfig cfg = base;
    if (axis == SweepAxis::alpha) {
      cfg.mode = TrainMode::hat;
      cfg.alpha = v;
    } else {
      cfg.attack.level = v;
    }
    auto trained = train(train_corpus, cfg);
    auto report = evaluate(trained.params, eval_corpus, protocol, eval_seed);
    out.points.push_back(SweepPoint{v, std::move(trained.params), std::move(report)});
  }
  return out;
}

void SweepReport::write_csv(std::ostream& os) const {
  os << "axis,value,corpus,eps_hat,column,psnr_mean,psnr_std\n";
  for (const auto& p : points)
    for (const auto& r : p.report.rows)
      os << axis_name(axis) << ',' << format_number(p.value) << ',' << r.corpus << ',' << format_number(r.eps_hat)
         << ',' << r.column << ',' << format_number(r.psnr_mean) << ',' << format_number(r.psnr_std) << '\n';
}

void SweepReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out);
}

}  // namespace obsdn
