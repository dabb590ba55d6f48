#include <cmath>
#include <set>

#include "doctest.h"
#include "sticky_wedge/rng.h"
#include "sticky_wedge/stats.h"

namespace sw = sticky_wedge;

TEST_CASE("philox known-answer vectors") {
  using C = sw::PhiloxCounter;
  using K = sw::PhiloxKey;
  CHECK(sw::Philox4x32(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(sw::Philox4x32(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                       K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(sw::Philox4x32(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                       K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are reproducible and distinct") {
  sw::CounterRng a(7, 3, sw::kStreamLattice), b(7, 3, sw::kStreamLattice);
  for (int i = 0; i < 1000; ++i) CHECK(a.NextU32() == b.NextU32());
  std::set<std::uint64_t> firsts;
  for (std::uint64_t r = 0; r < 50; ++r) {
    for (std::uint64_t s : {sw::kStreamLattice, sw::kStreamSrbm}) {
      sw::CounterRng g(7, r, s);
      firsts.insert(g.NextU64());
    }
  }
  CHECK(firsts.size() == 100);
}

TEST_CASE("uniform, exponential and normal moments") {
  sw::CounterRng g(1, 0);
  const int n = 200000;
  std::vector<double> u(n), e(n), z(n);
  for (int i = 0; i < n; ++i) {
    u[i] = g.Uniform();
    e[i] = g.Exponential(2.0);
    z[i] = g.Normal();
    REQUIRE(u[i] > 0.0);
    REQUIRE(u[i] < 1.0);
  }
  CHECK(std::abs(sw::Mean(u) - 0.5) < 3 * std::sqrt(1.0 / 12 / n) + 1e-12);
  CHECK(std::abs(sw::Mean(e) - 0.5) < 3 * 0.5 / std::sqrt(n));
  CHECK(std::abs(sw::Mean(z)) < 3 / std::sqrt(n));
  CHECK(std::abs(sw::Variance(z) - 1.0) < 3 * std::sqrt(2.0 / n));
  CHECK(sw::KsOneSample(z, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); })
            .p_value > 0.001);
}

TEST_CASE("descriptive statistics") {
  const std::vector<double> x = {1, 2, 3, 4};
  CHECK(sw::Mean(x) == doctest::Approx(2.5));
  CHECK(sw::Variance(x) == doctest::Approx(5.0 / 3.0));
  CHECK(sw::StandardError(x) == doctest::Approx(std::sqrt(5.0 / 12.0)));
  CHECK(sw::Median(x) == doctest::Approx(2.5));
  CHECK(sw::Median({3, 1, 2}) == doctest::Approx(2.0));
  CHECK(sw::Covariance(x, {2, 4, 6, 8}) == doctest::Approx(10.0 / 3.0));
}

TEST_CASE("kolmogorov distribution") {
  CHECK(sw::KolmogorovSurvival(0.0) == doctest::Approx(1.0));
  // Tabulated critical values.
  CHECK(sw::KolmogorovSurvival(1.3581) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(sw::KolmogorovSurvival(1.6276) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(sw::KolmogorovSurvival(5.0) < 1e-10);
}

TEST_CASE("two-sample KS separates and accepts") {
  sw::CounterRng g(2, 0);
  std::vector<double> a(2000), b(2000), c(2000);
  for (int i = 0; i < 2000; ++i) {
    a[i] = g.Normal();
    b[i] = g.Normal();
    c[i] = g.Normal() + 0.3;
  }
  const auto same = sw::KsTwoSample(a, b);
  CHECK(same.effective_n == doctest::Approx(1000.0));
  CHECK(same.p_value > 0.001);
  CHECK(sw::KsTwoSample(a, c).p_value < 1e-6);
  // Exact statistic on a small case: samples {1,2} vs {3,4} differ by 1.
  CHECK(sw::KsTwoSample({1, 2}, {3, 4}).statistic == doctest::Approx(1.0));
}
