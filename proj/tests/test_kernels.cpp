#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fhmc/rng.hpp"
#include "fhmc/simd/kernels.hpp"

using namespace fhmc;

namespace {

std::vector<double> random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

const std::vector<std::size_t> kSizes{0, 1, 2, 3, 4, 5, 7, 8,
                                      15, 16, 31, 64, 67, 1000};

}  // namespace

TEST_CASE("dispatched kernels match the scalar reference") {
  const auto& scalar = simd::table(simd::Isa::scalar);
  simd::Isa isa = simd::active_isa();
  INFO("active isa: ", simd::isa_name(isa));
  const auto& fast = simd::table(isa);
  Rng rng(7);

  for (std::size_t n : kSizes) {
    auto x = random_vec(rng, n, 3.0);
    auto y = random_vec(rng, n, 0.5);
    auto w = random_vec(rng, n);

    // elementwise kernels are bit-identical by construction
    {
      auto y1 = y, y2 = y;
      scalar.axpy(1.7, x.data(), y1.data(), n);
      fast.axpy(1.7, x.data(), y2.data(), n);
      CHECK(y1 == y2);
    }
    {
      std::vector<double> o1(n), o2(n);
      scalar.add_scaled(x.data(), -0.3, y.data(), o1.data(), n);
      fast.add_scaled(x.data(), -0.3, y.data(), o2.data(), n);
      CHECK(o1 == o2);
      scalar.mul(x.data(), y.data(), o1.data(), n);
      fast.mul(x.data(), y.data(), o2.data(), n);
      CHECK(o1 == o2);
      auto ypos = y;
      for (auto& v : ypos) v = std::abs(v) + 0.1;
      scalar.div(x.data(), ypos.data(), o1.data(), n);
      fast.div(x.data(), ypos.data(), o2.data(), n);
      CHECK(o1 == o2);
    }
    {
      auto m1 = x, m2 = x;
      auto c1 = y, c2 = y;
      std::vector<double> s1(n, 0.5), s2(n, 0.5);
      scalar.welford_step(m1.data(), c1.data(), s1.data(), w.data(), 1.0 / 3.0, n);
      fast.welford_step(m2.data(), c2.data(), s2.data(), w.data(), 1.0 / 3.0, n);
      CHECK(m1 == m2);
      CHECK(c1 == c2);
      CHECK(s1 == s2);
    }
    // reductions may differ by association of the horizontal sum
    {
      double d1 = scalar.dot(x.data(), y.data(), n);
      double d2 = fast.dot(x.data(), y.data(), n);
      CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
      double t1 = scalar.dot3(w.data(), x.data(), y.data(), n);
      double t2 = fast.dot3(w.data(), x.data(), y.data(), n);
      CHECK(t1 == doctest::Approx(t2).epsilon(1e-12));
    }
  }
}

TEST_CASE("all_finite flags NaN and infinity at any position") {
  simd::Isa isa = simd::active_isa();
  const auto& fast = simd::table(isa);
  Rng rng(11);
  for (std::size_t n : {1ul, 3ul, 4ul, 9ul, 32ul, 33ul}) {
    auto x = random_vec(rng, n);
    CHECK(fast.all_finite(x.data(), n));
    for (std::size_t pos = 0; pos < n; ++pos) {
      auto bad = x;
      bad[pos] = std::numeric_limits<double>::quiet_NaN();
      CHECK_FALSE(fast.all_finite(bad.data(), n));
      bad[pos] = std::numeric_limits<double>::infinity();
      CHECK_FALSE(fast.all_finite(bad.data(), n));
      bad[pos] = -std::numeric_limits<double>::infinity();
      CHECK_FALSE(fast.all_finite(bad.data(), n));
    }
  }
  CHECK(fast.all_finite(nullptr, 0));
}

TEST_CASE("force_isa switches the dispatch table") {
  simd::Isa original = simd::active_isa();
  simd::force_isa(simd::Isa::scalar);
  CHECK(simd::active_isa() == simd::Isa::scalar);
  std::vector<double> x{1.0, 2.0, 3.0};
  CHECK(simd::dot(x.data(), x.data(), 3) == doctest::Approx(14.0));
  simd::force_isa(original);
  CHECK(simd::active_isa() == original);
#if !defined(FHMC_HAVE_NEON)
  CHECK_THROWS_AS(simd::force_isa(simd::Isa::neon), std::invalid_argument);
#endif
}
