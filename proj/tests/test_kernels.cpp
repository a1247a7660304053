#include <doctest.h>

#include <cmath>
#include <vector>

#include "imi/common/random.hpp"
#include "imi/kernels/kernels.hpp"

using namespace imi;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return v;
}

// Summation order differs between the paths, so compare with a bound scaled
// by the magnitude of the terms.
void check_close(double a, double b, double scale) { CHECK(std::abs(a - b) <= 1e-12 * (1.0 + scale)); }

}  // namespace

TEST_CASE("scalar kernels match naive loops") {
  Rng rng(11);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1000u}) {
    const auto a = random_vector(n, rng), b = random_vector(n, rng);
    double dot = 0, sum = 0, sq = 0;
    for (std::size_t i = 0; i < n; ++i) {
      dot += a[i] * b[i];
      sum += a[i];
      sq += a[i] * a[i];
    }
    check_close(kernels::scalar::dot(a.data(), b.data(), n), dot, static_cast<double>(n));
    check_close(kernels::scalar::sum(a.data(), n), sum, static_cast<double>(n));
    check_close(kernels::scalar::sum_squares(a.data(), n), sq, static_cast<double>(n));
  }
}

#if defined(IMI_HAVE_AVX2_TU)
TEST_CASE("avx2 kernels agree with the scalar reference on every tail length") {
  if (kernels::detected_isa() != kernels::Isa::avx2) {
    MESSAGE("CPU lacks AVX2/FMA; equivalence test skipped");
    return;
  }
  Rng rng(12);
  for (std::size_t n = 0; n <= 70; ++n) {
    const auto a = random_vector(n, rng), b = random_vector(n, rng);
    const double scale = static_cast<double>(n) * 4.0;
    check_close(kernels::avx2::dot(a.data(), b.data(), n), kernels::scalar::dot(a.data(), b.data(), n), scale);
    check_close(kernels::avx2::sum(a.data(), n), kernels::scalar::sum(a.data(), n), scale);
    check_close(kernels::avx2::sum_squares(a.data(), n), kernels::scalar::sum_squares(a.data(), n), scale);
    auto y1 = b, y2 = b;
    kernels::scalar::axpy(0.37, a.data(), y1.data(), n);
    kernels::avx2::axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1.0 + std::abs(y1[i])));
  }
}

TEST_CASE("unaligned spans give the same results") {
  if (kernels::detected_isa() != kernels::Isa::avx2) return;
  Rng rng(13);
  auto a = random_vector(101, rng), b = random_vector(101, rng);
  for (std::size_t off = 0; off < 4; ++off) {
    const std::size_t n = 97;
    check_close(kernels::avx2::dot(a.data() + off, b.data() + off, n),
                kernels::scalar::dot(a.data() + off, b.data() + off, n), 400.0);
  }
}
#endif

TEST_CASE("dispatch can be forced and restored") {
  const auto detected = kernels::detected_isa();
  CHECK(kernels::set_isa(kernels::Isa::scalar));
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(kernels::dot(a, b) == doctest::Approx(32.0));
  kernels::set_isa(detected);
  CHECK(kernels::active_isa() == detected);
  CHECK(kernels::dot(a, b) == doctest::Approx(32.0));
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
}
