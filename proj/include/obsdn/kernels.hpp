#pragma once

// Data-parallel inner loops behind the tensor primitives. Every kernel has a
// scalar reference implementation and, where the CPU supports it, an AVX2+FMA
// variant. The active table is chosen once at startup from CPUID and can be
// overridden with OBSDN_KERNELS=scalar|avx2 or kernels::select().

#include <cstddef>
#include <string_view>

namespace obsdn::kernels {

// Stride-1 zero-padded 2-D convolution geometry on C×H×W planes.
// `k` is odd; padding is (k-1)/2 so H×W is preserved.
struct ConvDims {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t k = 3;

  std::size_t pad() const noexcept { return (k - 1) / 2; }
  std::size_t plane() const noexcept { return height * width; }
  std::size_t weight_size() const noexcept { return c_out * c_in * k * k; }
};

struct KernelTable {
  const char* name;

  // out = conv(in, weight) + bias; out is overwritten. bias may be null.
  void (*conv2d_forward)(const ConvDims& d, const double* in, const double* weight, const double* bias,
                         double* out);
  // grad_in += conv^T(grad_out, weight)
  void (*conv2d_backward_input)(const ConvDims& d, const double* grad_out, const double* weight,
                                double* grad_in);
  // grad_weight += d<out>/d<weight> contracted with grad_out; grad_bias likewise (may be null).
  void (*conv2d_backward_weight)(const ConvDims& d, const double* grad_out, const double* in,
                                 double* grad_weight, double* grad_bias);

  double (*dot)(std::size_t n, const double* a, const double* b);
  // y += a * x
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // y = max(x, 0)
  void (*relu_forward)(std::size_t n, const double* x, double* y);
  // grad_in += (x > 0) ? grad_out : 0
  void (*relu_backward)(std::size_t n, const double* x, const double* grad_out, double* grad_in);
};

enum class Level { scalar, avx2 };

const KernelTable& scalar_table() noexcept;
// Null when the binary was built without AVX2 support.
const KernelTable* avx2_table() noexcept;

bool cpu_has_avx2() noexcept;

// Active table used by every tensor primitive.
const KernelTable& active() noexcept;
Level active_level() noexcept;

// Switch the active table. Returns false (and keeps the current one) when the
// requested level is unavailable on this build or CPU.
bool select(Level level) noexcept;

std::string_view level_name(Level level) noexcept;

}  // namespace obsdn::kernels
