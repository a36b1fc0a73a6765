#pragma once

#include <array>
#include <cstdint>

namespace obsdn {

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Domain-separated child seed: splitmix64 over (seed, domain, index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t domain, std::uint64_t index = 0) noexcept;

// Domain tags for derive_seed. Values are part of the reproducibility contract.
namespace seed_domain {
inline constexpr std::uint64_t init = 0x494e4954;       // "INIT"
inline constexpr std::uint64_t corpus = 0x434f5250;     // "CORP"
inline constexpr std::uint64_t shuffle = 0x53485546;    // "SHUF"
inline constexpr std::uint64_t train_noise = 0x544e4f49;  // "TNOI"
inline constexpr std::uint64_t val_noise = 0x564e4f49;    // "VNOI"
inline constexpr std::uint64_t eval_noise = 0x454e4f49;   // "ENOI"
inline constexpr std::uint64_t patches = 0x50415443;    // "PATC"
inline constexpr std::uint64_t worker = 0x574f524b;     // "WORK"
}  // namespace seed_domain

// xoshiro256++ seeded through splitmix64.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) noexcept;

  std::uint64_t next() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) noexcept;
  // Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() noexcept;

  std::array<std::uint64_t, 4> state() const noexcept { return s_; }

  friend bool operator==(const Rng&, const Rng&) = default;

 private:
  std::array<std::uint64_t, 4> s_{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace obsdn
