#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kldrl/simplex.hpp"
#include "test_util.hpp"

#include <cmath>
#include <limits>

using namespace kldrl;

namespace {

SocialState state2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return make_state(PopulationLayout{2}, v, 1e-9);
}

}  // namespace

TEST_CASE("divergence identity and frozen two-term value") {
  SocialState u = uniform_state(PopulationLayout{3});
  CHECK(kl_divergence(u, u) == 0.0);
  // 0.5 ln 2 + 0.5 ln(2/3), evaluated in extended precision
  CHECK(kl_divergence(state2(0.5, 0.5), state2(0.25, 0.75)) ==
        doctest::Approx(0.14384103622589046).epsilon(1e-12));
}

TEST_CASE("divergence is additive over population blocks") {
  std::mt19937_64 rng(11);
  PopulationLayout two{3, 4};
  PopulationLayout second{4};
  for (int i = 0; i < 20; ++i) {
    SocialState x = random_interior_state(two, rng);
    SocialState y = random_interior_state(two, rng);
    // align the first blocks; the difference must come from block two alone
    y.values.head(3) = x.values.head(3);
    SocialState x2{second, x.values.tail(4)};
    SocialState y2{second, y.values.tail(4)};
    CHECK(kl_divergence(x, y) == doctest::Approx(kl_divergence(x2, y2)).epsilon(1e-13));
  }
}

TEST_CASE("divergence nonnegative, zero only at equality") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    PopulationLayout layout = test::random_layout(rng);
    SocialState x = random_interior_state(layout, rng);
    SocialState y = random_interior_state(layout, rng);
    const double d = kl_divergence(x, y);
    CHECK(d >= 0.0);
    if ((x.values - y.values).cwiseAbs().maxCoeff() > 1e-3) CHECK(d > 0.0);
    CHECK(kl_divergence(x, x) == 0.0);
  }
}

TEST_CASE("divergence accepts a boundary first argument") {
  PopulationLayout layout{3};
  Eigen::VectorXd v(3);
  v << 1.0, 0.0, 0.0;
  SocialState x = make_state(layout, v);
  SocialState y = uniform_state(layout);
  CHECK(kl_divergence(x, y) == doctest::Approx(std::log(3.0)));
  CHECK_THROWS_AS(kl_divergence(y, x), std::domain_error);
}

TEST_CASE("divergence rejects mismatched layouts") {
  SocialState a = uniform_state(PopulationLayout{3});
  SocialState b = uniform_state(PopulationLayout{2, 2});
  CHECK_THROWS_AS(kl_divergence(a, b), std::invalid_argument);
}

TEST_CASE("gradient values and boundary rejection") {
  SocialState x = state2(0.5, 0.5);
  SocialState y = state2(0.25, 0.75);
  PayoffVector g = kl_gradient(x, y);
  CHECK(g.values[0] == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(g.values[1] == doctest::Approx(std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(kl_gradient(x, x).values.cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  CHECK_THROWS_AS(kl_gradient(make_state(PopulationLayout{2}, v), y), std::domain_error);
}

TEST_CASE("gradient matches centered finite differences along tangents") {
  std::mt19937_64 rng(3);
  const double h = 1e-6;
  for (int i = 0; i < 200; ++i) {
    PopulationLayout layout = test::random_layout(rng);
    SocialState x = interior_clamp(random_interior_state(layout, rng), 1e-3);
    SocialState y = interior_clamp(random_interior_state(layout, rng), 1e-3);
    Eigen::VectorXd dir = test::random_tangent(rng, layout);
    if (dir.norm() < 1e-9) continue;
    dir.normalize();
    SocialState xp{layout, x.values + h * dir};
    SocialState xm{layout, x.values - h * dir};
    const double numeric = (kl_divergence(xp, y) - kl_divergence(xm, y)) / (2 * h);
    CHECK(std::abs(numeric - dir.dot(kl_gradient(x, y).values)) <= 1e-6);
  }
}

TEST_CASE("gradient cross identity for parameter pairs") {
  // x^T grad D(a||b) = D(x||b) - D(x||a) for any interior triple
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    PopulationLayout layout = test::random_layout(rng);
    SocialState x = random_interior_state(layout, rng);
    SocialState a = random_interior_state(layout, rng);
    SocialState b = random_interior_state(layout, rng);
    const double lhs = x.values.dot(kl_gradient(a, b).values);
    const double rhs = kl_divergence(x, b) - kl_divergence(x, a);
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("linear argmax ties break to the lowest strategy index") {
  PopulationLayout layout{3, 3};
  ArgmaxResult r = linear_argmax(PayoffVector{layout, Eigen::VectorXd::Zero(6)});
  Eigen::VectorXd expect(6);
  expect << 1, 0, 0, 1, 0, 0;
  CHECK((r.vertex.values - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.value == 0.0);
}

TEST_CASE("linear argmax on a worked example") {
  PopulationLayout layout{3, 3};
  Eigen::VectorXd v(6);
  v << 1, 3, 2, -1, -2, 0;
  ArgmaxResult r = linear_argmax(PayoffVector{layout, v});
  Eigen::VectorXd expect(6);
  expect << 0, 1, 0, 0, 0, 1;
  CHECK((r.vertex.values - expect).cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.value == doctest::Approx(3.0));
}

TEST_CASE("linear argmax equals exhaustive vertex enumeration") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    PopulationLayout layout = test::random_layout(rng);
    Eigen::VectorXd r = test::random_vector(rng, layout.total(), 2.0);
    ArgmaxResult got = linear_argmax(PayoffVector{layout, r});
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> picks(static_cast<size_t>(layout.populations()), 0);
    while (true) {
      double value = 0.0;
      for (int k = 0; k < layout.populations(); ++k) {
        value += r[layout.offset(k) + picks[static_cast<size_t>(k)]];
      }
      best = std::max(best, value);
      int k = 0;
      for (; k < layout.populations(); ++k) {
        if (++picks[static_cast<size_t>(k)] < layout.count(k)) break;
        picks[static_cast<size_t>(k)] = 0;
      }
      if (k == layout.populations()) break;
    }
    CHECK(got.value == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("linear argmax rejects non-finite payoffs") {
  PopulationLayout layout{2};
  Eigen::VectorXd v(2);
  v << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(linear_argmax(PayoffVector{layout, v}), std::invalid_argument);
}

TEST_CASE("interior clamp floors and renormalizes") {
  PopulationLayout layout{3};
  Eigen::VectorXd v(3);
  v << 1.0, 0.0, 0.0;
  SocialState clamped = interior_clamp(make_state(layout, v), 1e-8);
  CHECK(clamped.values.minCoeff() >= 1e-8);
  CHECK(clamped.values.sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(clamped.values[0] == doctest::Approx(1.0 - 2e-8));

  SocialState interior = make_state(layout, [] {
    Eigen::VectorXd w(3);
    w << 0.1, 0.4, 0.5;
    return w;
  }());
  SocialState same = interior_clamp(interior, 1e-8);
  CHECK((same.values - interior.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("interior clamp output always satisfies the state invariants") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    PopulationLayout layout = test::random_layout(rng);
    Eigen::VectorXd v(layout.total());
    for (int j = 0; j < v.size(); ++j) v[j] = u(rng) < 0.3 ? 0.0 : u(rng);
    for (int k = 0; k < layout.populations(); ++k) {
      auto blk = layout.block(v, k);
      if (blk.sum() == 0.0) blk[0] = 1.0;
      blk /= blk.sum();
    }
    SocialState clamped = interior_clamp(make_state(layout, v, 1e-9), 1e-9);
    require_state(layout, clamped.values, 1e-9);
    CHECK(clamped.values.minCoeff() >= 1e-9);
  }
}

TEST_CASE("interior clamp rejects a floor outside its range") {
  SocialState u = uniform_state(PopulationLayout{3});
  CHECK_THROWS_AS(interior_clamp(u, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(interior_clamp(u, 0.4), std::invalid_argument);
}
