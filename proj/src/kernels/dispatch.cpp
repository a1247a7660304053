#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "imi/kernels/kernels.hpp"

namespace imi::kernels {
namespace {

struct Table {
  double (*dot)(const double*, const double*, std::size_t);
  void (*axpy)(double, const double*, double*, std::size_t);
  double (*sum)(const double*, std::size_t);
  double (*sum_squares)(const double*, std::size_t);
};

constexpr Table kScalar{scalar::dot, scalar::axpy, scalar::sum, scalar::sum_squares};
#if defined(IMI_HAVE_AVX2_TU)
constexpr Table kAvx2{avx2::dot, avx2::axpy, avx2::sum, avx2::sum_squares};
#endif

Isa probe() {
#if defined(IMI_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) {
    // IMI_FORCE_SCALAR=1 pins the reference path process-wide.
    const char* force = std::getenv("IMI_FORCE_SCALAR");
    if (force == nullptr || force[0] == '\0' || force[0] == '0') return Isa::avx2;
  }
#endif
  return Isa::scalar;
}

std::atomic<Isa>& current() {
  static std::atomic<Isa> isa{probe()};
  return isa;
}

const Table& table() {
#if defined(IMI_HAVE_AVX2_TU)
  if (current().load(std::memory_order_relaxed) == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw std::invalid_argument("kernel operands differ in length");
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

Isa detected_isa() {
  static const Isa detected = probe();
  return detected;
}

Isa active_isa() { return current().load(); }

bool set_isa(Isa isa) {
  if (isa == Isa::avx2) {
#if defined(IMI_HAVE_AVX2_TU) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))) return false;
#else
    return false;
#endif
  }
  current().store(isa);
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_same_length(a.size(), b.size());
  return table().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_length(x.size(), y.size());
  table().axpy(alpha, x.data(), y.data(), x.size());
}

double sum(std::span<const double> x) { return table().sum(x.data(), x.size()); }

double sum_squares(std::span<const double> x) { return table().sum_squares(x.data(), x.size()); }

}  // namespace imi::kernels
