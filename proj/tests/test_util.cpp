#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <atomic>
#include <cstdlib>
#include <numeric>
#include <string>
#include <vector>

#include "flowforms/util.hpp"

using namespace flowforms;

TEST_CASE("van der Corput digits") {
  CHECK(util::halton(1, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(util::halton(2, 2) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(util::halton(3, 2) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(util::halton(4, 2) == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(util::halton(1, 3) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(util::halton(2, 3) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(util::halton(3, 3) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("probe_box stays inside the box and is deterministic") {
  const Vec lo = (Vec(3) << -1.0, 2.0, 0.5).finished();
  const Vec hi = (Vec(3) << 1.0, 3.0, 0.75).finished();
  const auto pts = util::probe_box(lo, hi, 64);
  REQUIRE(pts.size() == 64);
  for (const Vec& p : pts)
    for (int i = 0; i < 3; ++i) {
      CHECK(p(i) >= lo(i));
      CHECK(p(i) <= hi(i));
    }
  const auto again = util::probe_box(lo, hi, 64);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(pts[i] == again[i]);

  const auto shifted = util::probe_box(lo, hi, 64, 64);
  CHECK(shifted[0] != pts[0]);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  const auto [x, w] = util::gauss_legendre(5);
  REQUIRE(x.size() == 5);
  for (int k = 0; k <= 9; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      acc += w[i] * std::pow(x[i], k);
    const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
    CHECK(acc == doctest::Approx(exact).epsilon(1e-13));
  }
  CHECK(std::accumulate(w.begin(), w.end(), 0.0) ==
        doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("format_double round-trips") {
  for (double v :
       {0.1, 1.0 / 3.0, -2.5e-17, 1234567.891, 0.0, -0.0, 1e308}) {
    const std::string s = util::format_double(v);
    CHECK(std::stod(s) == v);
  }
  CHECK(util::format_double(0.5) == "0.5");
  CHECK(util::format_double(2.0) == "2");
}

TEST_CASE("fnv1a reference values") {
  CHECK(util::fnv1a_hex("") == "cbf29ce484222325");
  CHECK(util::fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(util::fnv1a_hex("hello") == "a430d84680aabd0b");
}

TEST_CASE("parallel_for covers the range once for any worker count") {
  const std::size_t n = 1037;
  for (unsigned workers : {1u, 2u, 3u, 8u}) {
    std::vector<int> hits(n, 0);
    util::parallel_for(
        n,
        [&](std::size_t begin, std::size_t end) {
          for (std::size_t i = begin; i < end; ++i) hits[i] += 1;
        },
        workers);
    for (std::size_t i = 0; i < n; ++i) CHECK(hits[i] == 1);
  }
  // Degenerate sizes.
  util::parallel_for(0, [](std::size_t, std::size_t) { FAIL("no work"); }, 4);
  std::atomic<int> count{0};
  util::parallel_for(
      2, [&](std::size_t b, std::size_t e) { count += static_cast<int>(e - b); },
      16);
  CHECK(count == 2);
}

TEST_CASE("worker_count honors the environment override") {
  setenv("FLOWFORMS_WORKERS", "3", 1);
  CHECK(util::worker_count() == 3);
  unsetenv("FLOWFORMS_WORKERS");
  CHECK(util::worker_count() >= 1);
}
