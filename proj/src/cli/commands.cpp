#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "obsdn/checkpoint.hpp"
#include "obsdn/cli.hpp"
#include "obsdn/error.hpp"
#include "obsdn/image_io.hpp"
#include "obsdn/kernels.hpp"
#include "obsdn/metrics.hpp"
#include "obsdn/noise.hpp"
#include "obsdn/selftest.hpp"

#ifndef OBSDN_VERSION
#define OBSDN_VERSION "0.0.0"
#endif

namespace obsdn::cli {

namespace fs = std::filesystem;

namespace {

struct Command {
  const char* name;
  Group group;
  const char* summary;
};

constexpr Command kCommands[] = {
    {"train", g_train, "train a denoiser (nt, vat or hat) and write model.obsd and train_log.csv"},
    {"attack", g_attack, "run the zero-mean observation attack on images and write the perturbations"},
    {"eval", g_eval, "evaluate a checkpoint under gaussian, uniform and attacked noise"},
    {"denoise", g_denoise, "denoise an image file or directory with a checkpoint"},
    {"sweep", g_sweep, "train and evaluate one model per grid value of alpha or rho"},
};

std::string flag_name(const std::string& key) {
  std::string f = key;
  std::replace(f.begin(), f.end(), '_', '-');
  return "--" + f;
}

std::string keys_footer() {
  std::string s = "Config keys (use key=value in --config files or --key-name on the command line):\n";
  for (const auto& k : config_keys()) {
    std::string line = "  " + k.name + " = " + (k.default_value.empty() ? "\"\"" : k.default_value);
    if (line.size() < 40) line.resize(40, ' ');
    s += line + " " + k.help + "\n";
  }
  return s;
}

fs::path out_dir(const Settings& s) {
  fs::path dir = s.get("out");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& command, const Settings& s, unsigned group,
                    const nlohmann::ordered_json& extra = {}) {
  nlohmann::ordered_json j;
  j["tool"] = "obsdn";
  j["version"] = OBSDN_VERSION;
  j["command"] = command;
  j["seed"] = seed_of(s);
  auto& cfg = j["config"];
  cfg = nlohmann::ordered_json::object();
  for (const auto& k : config_keys())
    if (k.groups & group) cfg[k.name] = s.get(k.name);
  if (!extra.is_null()) j["outputs"] = extra;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << j.dump(2) << "\n";
}

ModelParams load_model(const Settings& s) {
  const auto& path = s.get("ckpt");
  if (path.empty()) throw ConfigError("ckpt", "a checkpoint is required (--ckpt)");
  return load_checkpoint(path);
}

std::string image_ext(const Tensor& t) { return t.dim(0) == 3 ? ".ppm" : ".pgm"; }

void write_f64(const fs::path& path, const Tensor& t) {
  std::vector<std::uint8_t> bytes;
  bytes.reserve(t.size() * 8);
  for (double v : t.data()) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<std::uint8_t>(u >> (8 * b)));
  }
  write_file(path, bytes);
}

// Maps a perturbation to [0, 1] around mid-gray for viewing.
Tensor visualize_delta(const Tensor& d) {
  const double m = max_abs(d);
  Tensor v(d.shape(), 0.5);
  if (m > 0.0)
    for (std::size_t i = 0; i < d.size(); ++i) v[i] = 0.5 + 0.5 * d[i] / m;
  return v;
}

int cmd_train(const Settings& s, std::ostream& out) {
  const TrainConfig cfg = train_config(s);
  const Corpus corpus = training_corpus(s);
  const fs::path dir = out_dir(s);
  const auto result = train(corpus, cfg);
  save_checkpoint(result.params, dir / "model.obsd");
  result.log.write_csv(dir / "train_log.csv");
  write_manifest(dir, "train", s, g_train, {{"checkpoint", "model.obsd"}, {"log", "train_log.csv"}});
  const auto& last = result.log.rows.back();
  out << "trained " << mode_name(cfg.mode) << " for " << cfg.epochs << " epochs on " << corpus.size()
      << " patches: loss " << format_number(last.loss) << ", val psnr " << format_number(last.psnr_val) << " dB\n"
      << "wrote " << (dir / "model.obsd").string() << "\n";
  return 0;
}

int cmd_attack(const Settings& s, std::ostream& out) {
  const double eps_hat = parse_level("eps_hat", s.get("eps_hat"));
  const double level = parse_level("atk_level", s.get("atk_level"));
  if (level > eps_hat) throw ConfigError("atk_level", "must not exceed eps_hat");
  const AttackConfig tmpl = eval_attack_template(s);
  const ModelParams params = load_model(s);
  const Corpus corpus = evaluation_corpus(s);
  const double sigma = budget_split(eps_hat, level);
  const std::uint64_t seed = seed_of(s);
  const fs::path dir = out_dir(s);

  std::ofstream trace(dir / "trace.csv");
  std::ofstream summary(dir / "summary.csv");
  if (!trace || !summary) throw IoError("cannot write attack reports in " + dir.string());
  trace << "image,iter,objective\n";
  summary << "image,channels,height,width,rho,sigma,delta_norm,psnr_denoised,psnr_denoised_adv\n";

  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Tensor& x = corpus[i].clean;
    Rng rng(derive_seed(derive_seed(seed, seed_domain::eval_noise, 0), seed_domain::worker, i));
    const Tensor y = clip(x + sample_noise(GaussianFixed{sigma}, x.shape(), rng), tmpl.p_min, tmpl.p_max);
    AttackConfig cfg = tmpl;
    cfg.rho = level * std::sqrt(static_cast<double>(x.size()));
    const auto res = obsatk(params, x, y, cfg);
    const Tensor y_adv = y + res.delta;
    const Tensor fy = denoise(params, y);
    const Tensor fy_adv = denoise(params, y_adv);

    const std::string stem = "img" + std::to_string(i);
    const std::string ext = image_ext(x);
    write_image(dir / (stem + "_noisy" + ext), y);
    write_image(dir / (stem + "_adv" + ext), y_adv);
    write_image(dir / (stem + "_denoised" + ext), fy);
    write_image(dir / (stem + "_denoised_adv" + ext), fy_adv);
    write_image(dir / (stem + "_delta" + ext), visualize_delta(res.delta));
    write_f64(dir / (stem + "_delta.bin"), res.delta);

    for (std::size_t t = 0; t < res.objective_trace.size(); ++t)
      trace << i << ',' << t << ',' << format_number(res.objective_trace[t]) << '\n';
    trace << i << ',' << res.objective_trace.size() << ','
          << format_number(adv_objective(params, y, res.delta, x)) << '\n';
    summary << i << ',' << x.dim(0) << ',' << x.dim(1) << ',' << x.dim(2) << ',' << format_number(cfg.rho) << ','
            << format_number(sigma) << ',' << format_number(l2_norm(res.delta)) << ','
            << format_number(psnr(fy, x)) << ',' << format_number(psnr(fy_adv, x)) << '\n';
  }
  write_manifest(dir, "attack", s, g_attack, {{"trace", "trace.csv"}, {"summary", "summary.csv"}});
  out << "attacked " << corpus.size() << " images at level " << format_number(level * 255.0) << "/255; wrote "
      << (dir / "summary.csv").string() << "\n";
  return 0;
}

int cmd_eval(const Settings& s, std::ostream& out) {
  const EvalProtocol proto = eval_protocol(s);
  const ModelParams params = load_model(s);
  const Corpus corpus = evaluation_corpus(s);
  const fs::path dir = out_dir(s);
  const auto report = evaluate(params, corpus, proto, seed_of(s));
  report.write_csv(dir / "report.csv");
  report.write_json(dir / "report.json");
  write_manifest(dir, "eval", s, g_eval, {{"csv", "report.csv"}, {"json", "report.json"}});
  report.write_csv(out);
  return 0;
}

int cmd_denoise(const Settings& s, std::ostream& out) {
  const ModelParams params = load_model(s);
  const fs::path input = s.get("input");
  if (input.empty()) throw ConfigError("input", "an image file or directory is required (--input)");
  std::vector<fs::path> files;
  if (fs::is_directory(input)) {
    for (const auto& e : fs::directory_iterator(input)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".pgm" || ext == ".ppm")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(input);
  }
  if (files.empty()) throw ConfigError("input", "no .pgm or .ppm files in " + input.string());
  const fs::path dir = out_dir(s);
  for (const auto& f : files) {
    const Tensor y = read_image(f);
    const fs::path dst = dir / (f.stem().string() + "_denoised" + image_ext(y));
    write_image(dst, denoise(params, y));
    out << "wrote " << dst.string() << "\n";
  }
  write_manifest(dir, "denoise", s, g_denoise);
  return 0;
}

int cmd_sweep(const Settings& s, std::ostream& out) {
  const std::string& axis_text = s.get("sweep_axis");
  SweepAxis axis;
  if (axis_text == "alpha") axis = SweepAxis::alpha;
  else if (axis_text == "rho") axis = SweepAxis::rho;
  else throw ConfigError("sweep_axis", "expected alpha or rho, got '" + axis_text + "'");

  std::vector<double> grid;
  std::string item;
  std::istringstream is(s.get("sweep_grid"));
  while (std::getline(is, item, ','))
    grid.push_back(axis == SweepAxis::alpha ? parse_double("sweep_grid", item) : parse_level("sweep_grid", item));
  if (grid.empty()) throw ConfigError("sweep_grid", "sweep grid is empty");
  if (axis == SweepAxis::alpha)
    for (double a : grid)
      if (a < 0.0) throw ConfigError("sweep_grid", "alpha values must be >= 0");

  const TrainConfig base = train_config(s);
  const EvalProtocol proto = eval_protocol(s);
  const Corpus train_corpus = training_corpus(s);
  const Corpus eval_corpus = evaluation_corpus(s);
  const fs::path dir = out_dir(s);
  const auto report = ablation_sweep(train_corpus, eval_corpus, axis, grid, base, proto, seed_of(s));
  for (std::size_t i = 0; i < report.points.size(); ++i)
    save_checkpoint(report.points[i].params, dir / ("sweep_" + std::to_string(i) + ".obsd"));
  report.write_csv(dir / "sweep.csv");
  write_manifest(dir, "sweep", s, g_sweep, {{"csv", "sweep.csv"}});
  report.write_csv(out);
  return 0;
}

int cmd_selftest(std::ostream& out) {
  out << "kernels: " << kernels::level_name(kernels::active_level()) << "\n";
  bool ok = true;
  for (const auto& [title, rep] :
       {std::pair{"gradients", selftest::gradient_suite()}, std::pair{"projection", selftest::projection_suite()}}) {
    for (const auto& c : rep.checks) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s %-10s %-36s %.3e < %.0e\n", c.pass ? "PASS" : "FAIL", title, c.name.c_str(),
                    c.value, c.limit);
      out << buf;
    }
    char buf[80];
    std::snprintf(buf, sizeof buf, "%s: %.2f s\n", title, rep.seconds);
    out << buf;
    ok = ok && rep.passed();
  }
  out << (ok ? "selftest passed\n" : "selftest FAILED\n");
  return ok ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"obsdn: zero-mean observation attacks and adversarial training for image denoisers", "obsdn"};
  app.set_version_flag("--version", std::string("obsdn ") + OBSDN_VERSION);
  app.require_subcommand(1);
  app.footer(keys_footer());

  std::string config_path;
  std::map<std::string, std::map<std::string, std::string>> flag_values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& c : kCommands) {
    auto* sub = app.add_subcommand(c.name, c.summary);
    sub->add_option("--config", config_path, "flat key=value config file");
    auto& store = flag_values[c.name];
    for (const auto& k : config_keys()) {
      if (!(k.groups & c.group)) continue;
      sub->add_option(flag_name(k.name), store[k.name], k.help)->default_str(k.default_value);
    }
    subs[c.name] = sub;
  }
  auto* selftest_cmd = app.add_subcommand("selftest", "run the gradient and projection self-checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const auto parsed = app.get_subcommands();
    out << (parsed.empty() ? app.help() : parsed.front()->help());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << "obsdn " << OBSDN_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (selftest_cmd->parsed()) return cmd_selftest(out);
    for (const auto& c : kCommands) {
      auto* sub = subs[c.name];
      if (!sub->parsed()) continue;
      Settings settings;
      if (!config_path.empty()) settings.merge_file(config_path);
      for (const auto& k : config_keys()) {
        if (!(k.groups & c.group)) continue;
        if (sub->count(flag_name(k.name)) > 0) settings.set(k.name, flag_values[c.name][k.name]);
      }
      const std::string name = c.name;
      if (name == "train") return cmd_train(settings, out);
      if (name == "attack") return cmd_attack(settings, out);
      if (name == "eval") return cmd_eval(settings, out);
      if (name == "denoise") return cmd_denoise(settings, out);
      return cmd_sweep(settings, out);
    }
    err << "error: no command given\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << (e.key().empty() ? "" : "config key '" + e.key() + "': ") << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace obsdn::cli
