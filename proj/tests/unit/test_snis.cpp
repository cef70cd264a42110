#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "psnis/errors.hpp"
#include "psnis/poisson.hpp"
#include "psnis/snis.hpp"

using namespace psnis;

TEST_CASE("normalize_weights") {
  SUBCASE("equal log-weights are uniform") {
    const std::vector<double> lw(4, -3.7);
    for (double w : normalize_weights(lw)) CHECK(w == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("very negative log-weights do not underflow") {
    const std::vector<double> lw{-1000.0, -1000.0};
    const auto w = normalize_weights(lw);
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
  }
  SUBCASE("ln 1 and ln 3") {
    const std::vector<double> lw{0.0, std::log(3.0)};
    const auto w = normalize_weights(lw);
    CHECK(w[0] == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(w[1] == doctest::Approx(0.75).epsilon(1e-14));
  }
  SUBCASE("-inf entries get the floor weight") {
    const std::vector<double> lw{0.0, -INFINITY};
    const auto w = normalize_weights(lw);
    CHECK(w[0] == doctest::Approx(1.0));
    CHECK(w[1] >= 0.0);
    CHECK(w[1] < 1e-300);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(normalize_weights(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(normalize_weights(std::vector<double>{0.0, NAN}), InvalidArgument);
    CHECK_THROWS_AS(normalize_weights(std::vector<double>{0.0, INFINITY}), InvalidArgument);
    CHECK_THROWS_AS(normalize_weights(std::vector<double>{-INFINITY, -INFINITY}), InvalidArgument);
  }
}

TEST_CASE("normalize_weights invariants on random inputs") {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z(0.0, 50.0);
  std::uniform_int_distribution<int> len(1, 40);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> lw(static_cast<std::size_t>(len(gen)));
    for (double& v : lw) v = z(gen) - 400.0;
    const auto w = normalize_weights(lw);
    CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    for (double v : w) CHECK(v >= 0.0);

    const double shift = z(gen);
    std::vector<double> moved = lw;
    for (double& v : moved) v += shift;
    const auto w2 = normalize_weights(moved);
    for (std::size_t j = 0; j < w.size(); ++j) CHECK(std::abs(w[j] - w2[j]) < 1e-12);

    const double ess = effective_sample_size(lw);
    CHECK(ess >= 1.0 - 1e-12);
    CHECK(ess <= static_cast<double>(lw.size()) + 1e-9);
  }
}

TEST_CASE("effective_sample_size") {
  CHECK(effective_sample_size(std::vector<double>(10, 0.0)) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(effective_sample_size_normalized(std::vector<double>{0.25, 0.75}) == doctest::Approx(1.6));
  CHECK(effective_sample_size(std::vector<double>{0.0, -2000.0}) == doctest::Approx(1.0));
}

TEST_CASE("snis_estimate") {
  SUBCASE("scalar payloads") {
    const std::vector<double> lw{0.0, std::log(3.0)};
    const std::vector<double> x{2.0, 6.0};
    CHECK(snis_estimate<double>(lw, x) == doctest::Approx(5.0).epsilon(1e-14));
  }
  SUBCASE("vector payloads through WeightedSampleSet and columns agree") {
    WeightedSampleSet<Vector> set;
    Matrix cols(3, 4);
    std::mt19937_64 gen(1);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int j = 0; j < 4; ++j) {
      Vector v(3);
      for (int i = 0; i < 3; ++i) v[i] = z(gen);
      cols.col(j) = v;
      set.payloads.push_back(v);
      set.log_weights.push_back(3.0 * z(gen));
    }
    const Vector a = snis_estimate(set);
    const Vector b = snis_estimate_columns(set.log_weights, cols);
    const std::vector<Eigen::Index> idx{0, 1, 2, 3};
    std::vector<double> w;
    const Vector c = snis_estimate_columns(set.log_weights, cols, idx, &w);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a - c).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(w.size() == 4);
  }
  SUBCASE("estimate stays within the convex hull of the payloads") {
    std::mt19937_64 gen(4);
    std::normal_distribution<double> z(0.0, 20.0);
    for (int t = 0; t < 100; ++t) {
      std::vector<double> lw(12), x(12);
      for (int j = 0; j < 12; ++j) {
        lw[j] = z(gen);
        x[j] = z(gen);
      }
      const double est = snis_estimate<double>(lw, x);
      CHECK(est >= *std::min_element(x.begin(), x.end()) - 1e-12);
      CHECK(est <= *std::max_element(x.begin(), x.end()) + 1e-12);
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(snis_estimate<double>(std::vector<double>{0.0}, std::vector<double>{1.0, 2.0}),
                    InvalidArgument);
  }
}

TEST_CASE("snis posterior mean converges to the enumerated posterior mean") {
  // Scalar toy: y = 3, candidate intensities 1..10, uniform proposal.
  const std::vector<std::int64_t> y{3};
  std::vector<std::vector<double>> pool;
  for (int v = 1; v <= 10; ++v) pool.push_back({static_cast<double>(v)});
  const double exact = oracle::posterior_mean(y, pool, kDefaultEpsilonFloor)[0];

  std::mt19937_64 gen(12345);
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<double> lw, xs;
  for (int j = 0; j < 10000; ++j) {
    const double x = pool[static_cast<std::size_t>(pick(gen))][0];
    xs.push_back(x);
    lw.push_back(static_cast<double>(oracle::poisson_loglik(y, {x}, kDefaultEpsilonFloor)));
  }
  CHECK(std::abs(snis_estimate<double>(lw, xs) - exact) < 0.05);
}
