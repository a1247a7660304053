#pragma once

// Data-parallel inner loops used by the network layers, the diversity
// penalty and the activation-map predictors.
//
// Every kernel has a scalar reference in imi::kernels::scalar and, on x86-64,
// an AVX2/FMA variant in imi::kernels::avx2. The public entry points below
// dispatch through a table selected once at startup from the CPU's feature
// bits; tests force either path and check them against each other.

#include <cstddef>
#include <span>
#include <string_view>

namespace imi::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// Best instruction set supported by this CPU and this build.
Isa detected_isa();

/// Instruction set currently used by the dispatching entry points.
Isa active_isa();

/// Overrides the dispatch choice. Requesting avx2 on a CPU without it is
/// ignored and returns false.
bool set_isa(Isa isa);

double dot(std::span<const double> a, std::span<const double> b);
/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
double sum(std::span<const double> x);
double sum_squares(std::span<const double> x);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace scalar

#if defined(IMI_HAVE_AVX2_TU)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double sum_squares(const double* x, std::size_t n);
}  // namespace avx2
#endif

}  // namespace imi::kernels
