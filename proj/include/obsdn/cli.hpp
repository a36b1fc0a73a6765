#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "obsdn/attack.hpp"
#include "obsdn/corpus.hpp"
#include "obsdn/eval.hpp"
#include "obsdn/training.hpp"

namespace obsdn::cli {

// Command groups a key applies to; used for per-command flags and help.
enum Group : unsigned {
  g_train = 1u << 0,
  g_attack = 1u << 1,
  g_eval = 1u << 2,
  g_denoise = 1u << 3,
  g_sweep = 1u << 4,
  g_all = 0x1f,
};

struct KeyInfo {
  std::string name;
  std::string default_value;
  std::string help;
  unsigned groups = g_all;
};

// Every recognised config key, in documentation order.
const std::vector<KeyInfo>& config_keys();
const KeyInfo* find_key(std::string_view name);

// Flat key=value settings seeded with the defaults. Unknown keys throw
// ConfigError naming the key.
class Settings {
 public:
  Settings();

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  // key=value lines; '#' starts a comment; blank lines are skipped.
  void merge_text(std::string_view text, const std::string& origin);
  void merge_file(const std::string& path);

 private:
  std::map<std::string, std::string> values_;
};

// "25/255", "0.1" or "3". Negative or malformed values throw ConfigError(key).
double parse_level(const std::string& key, const std::string& text);
double parse_double(const std::string& key, const std::string& text);
std::size_t parse_count(const std::string& key, const std::string& text, std::size_t min = 0);
std::uint64_t parse_seed(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);

ArchConfig arch_config(const Settings& s);
TrainConfig train_config(const Settings& s);
AttackConfig eval_attack_template(const Settings& s);
EvalProtocol eval_protocol(const Settings& s);
std::uint64_t seed_of(const Settings& s);

// Training patches from `images` (random crops) or the synthetic generator.
Corpus training_corpus(const Settings& s);
// Whole evaluation images from `eval_images`, or synthetic ones.
Corpus evaluation_corpus(const Settings& s);
std::string corpus_name(const Settings& s);

// Exit codes: 0 success, 1 runtime failure, 2 bad arguments or config.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace obsdn::cli
