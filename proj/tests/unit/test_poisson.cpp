#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "psnis/errors.hpp"
#include "psnis/poisson.hpp"

using namespace psnis;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST_CASE("poisson_loglik closed forms") {
  const std::vector<std::int64_t> y0{0}, y2{2};
  CHECK(poisson_loglik(y0, vec({1.0})) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(poisson_loglik(y2, vec({2.0})) ==
        doctest::Approx(-2.0 + std::log(2.0)).epsilon(1e-15));
  CHECK(-2.0 + std::log(2.0) == doctest::Approx(-1.30685).epsilon(1e-5));
}

TEST_CASE("poisson_loglik matches the extended-precision oracle") {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> xs(0.1, 20.0);
  std::uniform_int_distribution<std::int64_t> ys(0, 60);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::int64_t> y(8);
    std::vector<double> x(8);
    Vector xv(8);
    for (int i = 0; i < 8; ++i) {
      y[i] = ys(gen);
      x[i] = xs(gen);
      xv[i] = x[i];
    }
    const double expect = static_cast<double>(oracle::poisson_loglik(y, x, kDefaultEpsilonFloor));
    CHECK(std::abs(poisson_loglik(y, xv) - expect) < 1e-10);
  }
}

TEST_CASE("poisson_loglik properties") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> xs(0.5, 30.0);

  SUBCASE("y = round(x) against the termwise value") {
    for (int t = 0; t < 50; ++t) {
      Vector x(6);
      std::vector<std::int64_t> y(6);
      std::vector<double> xd(6);
      for (int i = 0; i < 6; ++i) {
        x[i] = xs(gen);
        xd[i] = x[i];
        y[i] = std::llround(x[i]);
      }
      const double expect = static_cast<double>(oracle::poisson_loglik(y, xd, kDefaultEpsilonFloor));
      CHECK(std::abs(poisson_loglik(y, x) - expect) < 1e-9);
    }
  }
  SUBCASE("concave along each coordinate above the floor") {
    const std::vector<std::int64_t> y{3, 0, 12, 7};
    Vector x = vec({2.0, 0.5, 9.0, 4.0});
    const double h = 1e-3;
    for (int i = 0; i < 4; ++i) {
      Vector lo = x, hi = x;
      lo[i] -= h;
      hi[i] += h;
      const double second = poisson_loglik(y, hi) - 2.0 * poisson_loglik(y, x) + poisson_loglik(y, lo);
      CHECK(second <= 1e-12);
    }
  }
  SUBCASE("additive over concatenated patches") {
    const std::vector<std::int64_t> ya{1, 4, 0}, yb{9, 2}, yab{1, 4, 0, 9, 2};
    const Vector xa = vec({0.7, 3.1, 1.0}), xb = vec({8.5, 0.2});
    Vector xab(5);
    xab << xa, xb;
    CHECK(std::abs(poisson_loglik(yab, xab) - (poisson_loglik(ya, xa) + poisson_loglik(yb, xb))) < 1e-12);
  }
  SUBCASE("zero count on zero intensity contributes exactly -floor") {
    const std::vector<std::int64_t> y{0};
    CHECK(poisson_loglik(y, vec({0.0}), 1e-6) == -1e-6);
    CHECK(std::isfinite(poisson_loglik(std::vector<std::int64_t>{5}, vec({0.0}), 1e-6)));
  }
  SUBCASE("zero floor: positive count on zero intensity is impossible") {
    CHECK(poisson_loglik(std::vector<std::int64_t>{2}, vec({0.0}), 0.0) == -INFINITY);
    CHECK(poisson_loglik(std::vector<std::int64_t>{0}, vec({0.0}), 0.0) == 0.0);
  }
}

TEST_CASE("poisson_loglik errors") {
  CHECK_THROWS_AS(poisson_loglik(std::vector<std::int64_t>{-1}, vec({1.0})), InvalidArgument);
  CHECK_THROWS_AS(poisson_loglik(std::vector<std::int64_t>{1, 2}, vec({1.0})), InvalidArgument);
}

TEST_CASE("sample_poisson_image") {
  SUBCASE("all-zero image gives all-zero counts") {
    const ImageGrid zero(16, 16);
    const ImageGrid out = sample_poisson_image(zero, 5);
    for (double v : out.pixels()) CHECK(v == 0.0);
  }
  SUBCASE("deterministic per seed") {
    const ImageGrid flat(32, 32, std::vector<double>(32 * 32, 4.0));
    CHECK(sample_poisson_image(flat, 17) == sample_poisson_image(flat, 17));
    CHECK(!(sample_poisson_image(flat, 17) == sample_poisson_image(flat, 18)));
  }
  SUBCASE("moments at lambda = 10 over 1e6 pixels") {
    const ImageGrid flat(1000, 1000, std::vector<double>(1000000, 10.0));
    const ImageGrid out = sample_poisson_image(flat, 123);
    double sum = 0.0, sq = 0.0;
    for (double v : out.pixels()) {
      CHECK_MESSAGE(v == std::floor(v), "counts are integers");
      sum += v;
      sq += v * v;
    }
    const double n = 1e6, mean = sum / n, var = (sq - n * mean * mean) / (n - 1);
    CHECK(mean >= 9.99);
    CHECK(mean <= 10.01);
    CHECK(var >= 9.9);
    CHECK(var <= 10.1);
  }
  SUBCASE("P(0) at lambda = 0.5") {
    const ImageGrid flat(1000, 1000, std::vector<double>(1000000, 0.5));
    const ImageGrid out = sample_poisson_image(flat, 321);
    double zeros = 0.0;
    for (double v : out.pixels()) zeros += (v == 0.0);
    CHECK(std::abs(zeros / 1e6 - std::exp(-0.5)) < 0.005);
  }
}
