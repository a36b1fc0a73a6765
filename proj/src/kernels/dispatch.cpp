#include <atomic>
#include <cstdlib>
#include <string_view>

#include "obsdn/kernels.hpp"

namespace obsdn::kernels {

#ifndef OBSDN_HAVE_AVX2
const KernelTable* avx2_table() noexcept { return nullptr; }
#endif

bool cpu_has_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelTable* available(Level level) noexcept {
  if (level == Level::scalar) return &scalar_table();
  if (!cpu_has_avx2()) return nullptr;
  return avx2_table();
}

const KernelTable* initial_table() noexcept {
  if (const char* env = std::getenv("OBSDN_KERNELS")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_table();
    if (want == "avx2")
      if (auto* t = available(Level::avx2)) return t;
  }
  if (auto* t = available(Level::avx2)) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& slot() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active() noexcept { return *slot().load(std::memory_order_acquire); }

Level active_level() noexcept { return &active() == &scalar_table() ? Level::scalar : Level::avx2; }

bool select(Level level) noexcept {
  const KernelTable* t = available(level);
  if (!t) return false;
  slot().store(t, std::memory_order_release);
  return true;
}

std::string_view level_name(Level level) noexcept { return level == Level::scalar ? "scalar" : "avx2"; }

}  // namespace obsdn::kernels
