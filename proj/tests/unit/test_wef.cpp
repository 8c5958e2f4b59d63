#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "s2wef/error.hpp"
#include "s2wef/wef.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace s2wef;
using namespace s2wef::wef;

namespace {

Matrix m22(double a, double b, double c, double d) { return Matrix(2, 2, {a, b, c, d}); }

}  // namespace

TEST_CASE("dynamic_threshold") {
  const Matrix prev = m22(1.0, 2.0, 3.0, 4.0);
  CHECK(dynamic_threshold(prev, prev) == 0.0);
  const Matrix curr = m22(1.4, 2.1, 2.9, 4.0);
  CHECK(dynamic_threshold(prev, curr) == doctest::Approx(0.15).epsilon(1e-12));
  const Matrix shifted = m22(1.25, 2.25, 3.25, 4.25);
  CHECK(dynamic_threshold(prev, shifted) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK_THROWS_AS(dynamic_threshold(prev, Matrix(2, 3)), ShapeError);
}

TEST_CASE("wef_step") {
  const Matrix prev(2, 2, 0.0);
  const WefMatrix zero(2, 2, 5);

  SUBCASE("hand deltas increment only the large entry") {
    const auto f = wef_step(zero, prev, m22(0.4, 0.1, -0.1, 0.0));
    CHECK(f == WefMatrix(2, 2, 5, {1, 0, 0, 0}));
  }
  SUBCASE("equal deltas never beat their own mean") {
    const auto f = wef_step(zero, prev, m22(0.25, -0.25, 0.25, 0.25));
    CHECK(f.all_zero());
  }
  SUBCASE("no change leaves F unchanged") {
    const WefMatrix f(2, 2, 5, {1, 2, 3, 4});
    CHECK(wef_step(f, prev, prev) == f);
  }
  CHECK_THROWS_AS(wef_step(zero, prev, Matrix(3, 2)), ShapeError);
  CHECK_THROWS_AS(wef_step(WefMatrix(1, 4, 5), prev, prev), ShapeError);
}

TEST_CASE("build_wef") {
  const Matrix a = m22(0.1, 0.2, 0.3, 0.4);
  CHECK(build_wef(std::vector<Matrix>{a}).all_zero());
  CHECK(build_wef(std::vector<Matrix>{a, a, a, a}).all_zero());
  CHECK(build_wef(std::vector<Matrix>{a, a}).bound() == 1);
  CHECK_THROWS_AS(build_wef(std::vector<Matrix>{}), ConfigError);
  CHECK_THROWS_AS(build_wef(std::vector<Matrix>{a, Matrix(2, 3)}), ShapeError);

  std::mt19937_64 gen(17);
  const std::vector<Matrix> snaps{testing::random_matrix(gen, 2, 2), testing::random_matrix(gen, 2, 2),
                                  testing::random_matrix(gen, 2, 2)};
  const auto f = build_wef(snaps);
  const auto expect = oracle::naive_wef(snaps);
  CHECK(std::vector<int>(f.counts().begin(), f.counts().end()) == expect);
}

TEST_CASE("build_wef equals naive recomputation on random sequences" * doctest::test_suite("invariants")) {
  std::mt19937_64 gen(2024);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> steps(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = dim(gen), w = dim(gen);
    const int e = steps(gen);
    std::vector<Matrix> snaps{testing::random_matrix(gen, h, w)};
    for (int t = 0; t < e; ++t) {
      Matrix next = snaps.back();
      const Matrix step = testing::random_matrix(gen, h, w, 0.1);
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += step[i];
      snaps.push_back(next);
    }
    const auto f = build_wef(snaps);
    CHECK(f.bound() == e);
    CHECK(f.max_entry() <= e);
    CHECK(std::vector<int>(f.counts().begin(), f.counts().end()) == oracle::naive_wef(snaps));
  }
}

TEST_CASE("wef_step is monotone" * doctest::test_suite("invariants")) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto f = testing::random_wef(gen, 3, 3, 4);
    WefMatrix wide(3, 3, 5, {f.counts().begin(), f.counts().end()});
    const auto next = wef_step(wide, testing::random_matrix(gen, 3, 3), testing::random_matrix(gen, 3, 3));
    for (std::size_t i = 0; i < next.size(); ++i) CHECK(next[i] >= wide[i]);
  }
}

TEST_CASE("accumulate") {
  const WefMatrix a(2, 2, 3, {1, 0, 0, 2});
  const WefMatrix b(2, 2, 3, {0, 3, 1, 0});
  const auto sum = accumulate(std::vector<WefMatrix>{a, b});
  CHECK(sum == WefMatrix(2, 2, 6, {1, 3, 1, 2}));
  CHECK(accumulate(std::vector<WefMatrix>{a}) == a);
  CHECK(accumulate(std::vector<WefMatrix>{WefMatrix(2, 2, 3), WefMatrix(2, 2, 3)}).all_zero());
  CHECK_THROWS_AS(accumulate(std::vector<WefMatrix>{}), ConfigError);
  CHECK_THROWS_AS(accumulate(std::vector<WefMatrix>{a, WefMatrix(1, 4, 3)}), ShapeError);
}

TEST_CASE("WefMatrix bounds are enforced" * doctest::test_suite("invariants")) {
  CHECK_THROWS_AS(WefMatrix(1, 2, 3, {0, 4}), ConfigError);
  CHECK_THROWS_AS(WefMatrix(1, 2, 3, {-1, 0}), ConfigError);
  CHECK_THROWS_AS(WefMatrix(1, 2, 3, {0, 0, 0}), ShapeError);
}

TEST_CASE("counterfeit_one_step" * doctest::test_suite("invariants")) {
  std::mt19937_64 gen(9);
  const Matrix g = testing::random_matrix(gen, 4, 3);
  CHECK(counterfeit_one_step(g, g, 5, true).all_zero());
  CHECK_THROWS_AS(counterfeit_one_step(g, Matrix(3, 4), 5, true), ShapeError);
  CHECK_THROWS_AS(counterfeit_one_step(g, g, 0, true), ConfigError);

  for (int trial = 0; trial < 30; ++trial) {
    const Matrix fake = testing::random_matrix(gen, 4, 3);
    for (bool use_abs : {true, false}) {
      const auto f = counterfeit_one_step(fake, g, 5, use_abs);
      double alpha = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) alpha += std::fabs(fake[i] - g[i]);
      alpha /= static_cast<double>(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK((f[i] == 0 || f[i] == 5));
        const double d = fake[i] - g[i];
        const bool hit = use_abs ? std::fabs(d) > alpha : d > alpha;
        CHECK(f[i] == (hit ? 5 : 0));
      }
    }
  }

  // the signed reading ignores large negative moves
  const Matrix base(1, 2, 0.0);
  const Matrix moved(1, 2, {-1.0, 0.1});
  CHECK(counterfeit_one_step(moved, base, 3, true) == WefMatrix(1, 2, 3, {3, 0}));
  CHECK(counterfeit_one_step(moved, base, 3, false).all_zero());
}
