#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "obsdn/cli.hpp"
#include "obsdn/error.hpp"
#include "obsdn/rng.hpp"

namespace obsdn::cli {

const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"seed", "0", "master seed; every random stream is derived from it", g_all},
      {"threads", "1", "worker threads (results do not depend on it)", g_train | g_attack | g_eval | g_sweep},
      {"out", "obsdn-out", "output directory for artifacts and manifest.json", g_all},

      {"images", "", "directory of training PGM/PPM images; empty uses synthetic images", g_train | g_sweep},
      {"patches", "1024", "number of training patches", g_train | g_sweep},
      {"patch_size", "32", "training patch side in pixels", g_train | g_sweep},
      {"eval_images", "", "directory of evaluation PGM/PPM images; empty uses synthetic images",
       g_attack | g_eval | g_sweep},
      {"eval_count", "32", "number of synthetic evaluation images", g_attack | g_eval | g_sweep},
      {"eval_size", "32", "side of synthetic evaluation images", g_attack | g_eval | g_sweep},
      {"corpus_name", "", "name written into reports; defaults to the image directory name or 'synthetic'",
       g_eval | g_sweep},

      {"depth", "5", "number of conv layers (>= 2)", g_train | g_sweep},
      {"width", "16", "hidden channels", g_train | g_sweep},
      {"kernel", "3", "odd kernel size", g_train | g_sweep},
      {"channels", "1", "image channels: 1 gray or 3 RGB", g_train | g_sweep},
      {"residual", "true", "predict the noise and subtract it from the input", g_train | g_sweep},

      {"mode", "nt", "training mode: nt, vat or hat", g_train | g_sweep},
      {"eps", "25/255", "training noise: sigma ~ U(0, eps)", g_train | g_sweep},
      {"alpha", "1", "hat weight of the consistency term", g_train | g_sweep},
      {"epochs", "30", "training epochs", g_train | g_sweep},
      {"batch_size", "16", "patches per optimizer step", g_train | g_sweep},
      {"learning_rate", "0.001", "initial Adam learning rate (cosine decay)", g_train | g_sweep},
      {"val_fraction", "0.1", "fraction of patches held out for validation", g_train | g_sweep},
      {"train_atk_level", "5/255", "training attack budget per pixel (rho / sqrt(m))", g_train | g_sweep},
      {"train_atk_iters", "1", "training attack PGD iterations", g_train | g_sweep},
      {"train_atk_step", "normalized_l2", "training attack step rule: normalized_l2 or raw", g_train | g_sweep},
      {"train_atk_eta", "auto", "training attack step size; auto is 2 rho / iters", g_train | g_sweep},

      {"ckpt", "", "model checkpoint to load", g_attack | g_eval | g_denoise},
      {"eps_hat", "15/255", "test noise level", g_attack | g_eval | g_sweep},
      {"columns", "gaussian,uniform,atk-5", "report columns: gaussian, uniform, atk-R (R over 255)",
       g_eval | g_sweep},
      {"repeats", "3", "noise redraws per column", g_eval | g_sweep},
      {"atk_level", "5/255", "attack budget per pixel for the attack command", g_attack},
      {"atk_iters", "5", "evaluation attack PGD iterations", g_attack | g_eval | g_sweep},
      {"atk_step", "normalized_l2", "evaluation attack step rule: normalized_l2 or raw", g_attack | g_eval | g_sweep},
      {"atk_eta", "auto", "evaluation attack step size; auto is 2 rho / iters", g_attack | g_eval | g_sweep},
      {"p_min", "0", "lowest pixel value", g_attack | g_eval | g_sweep},
      {"p_max", "1", "highest pixel value", g_attack | g_eval | g_sweep},

      {"input", "", "image file or directory to denoise", g_denoise},

      {"sweep_axis", "alpha", "ablation axis: alpha or rho (training attack level)", g_sweep},
      {"sweep_grid", "0,0.5,1,2", "comma-separated grid values; rho values accept k/255", g_sweep},
  };
  return keys;
}

const KeyInfo* find_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (k.name == name) return &k;
  return nullptr;
}

Settings::Settings() {
  for (const auto& k : config_keys()) values_[k.name] = k.default_value;
}

void Settings::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) throw ConfigError(key, "unknown config key '" + key + "'");
  values_[key] = value;
}

const std::string& Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "unknown config key '" + key + "'");
  return it->second;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

StepRule step_rule(const Settings& s, const std::string& kind_key, const std::string& eta_key) {
  StepRule r;
  const auto& kind = s.get(kind_key);
  if (kind == "normalized_l2") r.kind = StepKind::normalized_l2;
  else if (kind == "raw") r.kind = StepKind::raw;
  else throw ConfigError(kind_key, "expected normalized_l2 or raw, got '" + kind + "'");
  const auto& eta = s.get(eta_key);
  if (eta != "auto") {
    r.eta = parse_double(eta_key, eta);
    if (!(*r.eta > 0.0)) throw ConfigError(eta_key, "step size must be positive");
  }
  return r;
}

}  // namespace

void Settings::merge_text(std::string_view text, const std::string& origin) {
  std::istringstream is{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", origin + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (!find_key(key))
      throw ConfigError(key, origin + ":" + std::to_string(lineno) + ": unknown config key '" + key + "'");
    set(key, trim(std::string_view(body).substr(eq + 1)));
  }
}

void Settings::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  merge_text(ss.str(), path);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError(key, "'" + text + "' is not a number");
  return v;
}

double parse_level(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  const auto slash = t.find('/');
  double v = 0.0;
  if (slash == std::string::npos) {
    v = parse_double(key, t);
  } else {
    const double num = parse_double(key, t.substr(0, slash));
    const double den = parse_double(key, t.substr(slash + 1));
    if (!(den > 0.0)) throw ConfigError(key, "'" + text + "' has a non-positive denominator");
    v = num / den;
  }
  if (v < 0.0) throw ConfigError(key, "'" + text + "' must be >= 0");
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text, std::size_t min) {
  const std::string t = trim(text);
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, "'" + text + "' is not a non-negative integer");
  if (v < min) throw ConfigError(key, "must be >= " + std::to_string(min));
  return v;
}

std::uint64_t parse_seed(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw ConfigError(key, "'" + text + "' is not an unsigned 64-bit integer");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "'" + text + "' is not a boolean");
}

std::uint64_t seed_of(const Settings& s) { return parse_seed("seed", s.get("seed")); }

ArchConfig arch_config(const Settings& s) {
  ArchConfig a;
  a.depth = parse_count("depth", s.get("depth"), 2);
  a.width = parse_count("width", s.get("width"), 1);
  a.kernel = parse_count("kernel", s.get("kernel"), 1);
  if (a.kernel % 2 == 0) throw ConfigError("kernel", "kernel size must be odd");
  a.channels_in = a.channels_out = parse_count("channels", s.get("channels"), 1);
  if (a.channels_in != 1 && a.channels_in != 3) throw ConfigError("channels", "must be 1 or 3");
  a.residual = parse_bool("residual", s.get("residual"));
  return a;
}

TrainConfig train_config(const Settings& s) {
  TrainConfig c;
  try {
    c.mode = parse_mode(s.get("mode"));
  } catch (const ConfigError& e) {
    throw ConfigError("mode", e.what());
  }
  c.eps = parse_level("eps", s.get("eps"));
  c.alpha = parse_double("alpha", s.get("alpha"));
  if (c.alpha < 0.0) throw ConfigError("alpha", "must be >= 0");
  c.attack.level = parse_level("train_atk_level", s.get("train_atk_level"));
  c.attack.iters = parse_count("train_atk_iters", s.get("train_atk_iters"), 1);
  c.attack.step = step_rule(s, "train_atk_step", "train_atk_eta");
  c.arch = arch_config(s);
  c.epochs = parse_count("epochs", s.get("epochs"), 1);
  c.batch_size = parse_count("batch_size", s.get("batch_size"), 1);
  c.learning_rate = parse_double("learning_rate", s.get("learning_rate"));
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  c.val_fraction = parse_double("val_fraction", s.get("val_fraction"));
  if (!(c.val_fraction >= 0.0 && c.val_fraction < 1.0)) throw ConfigError("val_fraction", "must be in [0, 1)");
  c.seed = seed_of(s);
  c.threads = parse_count("threads", s.get("threads"), 1);
  return c;
}

AttackConfig eval_attack_template(const Settings& s) {
  AttackConfig a;
  a.iters = parse_count("atk_iters", s.get("atk_iters"), 1);
  a.step = step_rule(s, "atk_step", "atk_eta");
  a.p_min = parse_double("p_min", s.get("p_min"));
  a.p_max = parse_double("p_max", s.get("p_max"));
  if (!(a.p_min < a.p_max)) throw ConfigError("p_max", "p_max must exceed p_min");
  return a;
}

EvalProtocol eval_protocol(const Settings& s) {
  EvalProtocol p;
  p.corpus_name = corpus_name(s);
  p.eps_hat = parse_level("eps_hat", s.get("eps_hat"));
  for (const auto& name : split_list(s.get("columns"))) p.columns.push_back(EvalColumn::parse(name));
  if (p.columns.empty()) throw ConfigError("columns", "at least one column is required");
  p.attack = eval_attack_template(s);
  p.repeats = parse_count("repeats", s.get("repeats"), 1);
  p.threads = parse_count("threads", s.get("threads"), 1);
  for (const auto& c : p.columns)
    if (c.kind == ColumnKind::atk && c.level > p.eps_hat)
      throw ConfigError("columns", c.name() + " exceeds eps_hat");
  return p;
}

std::string corpus_name(const Settings& s) {
  if (!s.get("corpus_name").empty()) return s.get("corpus_name");
  const auto& dir = s.get("eval_images");
  if (dir.empty()) return "synthetic";
  auto p = std::filesystem::path(dir);
  if (!p.has_filename()) p = p.parent_path();
  return p.filename().string();
}

namespace {

void require_channels(const std::vector<Tensor>& images, std::size_t channels, const std::string& key) {
  for (const auto& img : images)
    if (img.dim(0) != channels)
      throw ConfigError(key, "image has " + std::to_string(img.dim(0)) + " channels but channels=" +
                                 std::to_string(channels));
}

}  // namespace

Corpus training_corpus(const Settings& s) {
  const std::uint64_t seed = seed_of(s);
  const std::size_t count = parse_count("patches", s.get("patches"), 2);
  const std::size_t size = parse_count("patch_size", s.get("patch_size"), 1);
  const std::size_t channels = parse_count("channels", s.get("channels"), 1);
  const auto& dir = s.get("images");
  if (dir.empty()) {
    if (channels != 1) throw ConfigError("channels", "synthetic images are gray; set images= for RGB data");
    return synth_corpus(count, size, size, derive_seed(seed, seed_domain::corpus, 0));
  }
  const auto images = load_image_dir(dir);
  if (images.empty()) throw ConfigError("images", "no .pgm or .ppm files in " + dir);
  require_channels(images, channels, "images");
  return sample_patches(images, count, size, derive_seed(seed, seed_domain::patches, 0));
}

Corpus evaluation_corpus(const Settings& s) {
  const std::uint64_t seed = seed_of(s);
  const auto& dir = s.get("eval_images");
  if (dir.empty()) {
    const std::size_t n = parse_count("eval_count", s.get("eval_count"), 1);
    const std::size_t size = parse_count("eval_size", s.get("eval_size"), 1);
    return synth_corpus(n, size, size, derive_seed(seed, seed_domain::corpus, 1));
  }
  auto images = load_image_dir(dir);
  if (images.empty()) throw ConfigError("eval_images", "no .pgm or .ppm files in " + dir);
  return corpus_from_images(std::move(images));
}

}  // namespace obsdn::cli
