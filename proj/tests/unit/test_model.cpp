#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <stdexcept>

#include "gmpd/model.hpp"
#include "support.hpp"

using namespace gmpd;

TEST_CASE("1x1 channel is a finite scalar") {
  const Matrix h = generate_channel(SystemDims(1, 1), 7);
  CHECK(h.rows() == 1);
  CHECK(h.cols() == 1);
  CHECK(std::isfinite(h(0, 0)));
}

TEST_CASE("channel entries are standard normal") {
  const Matrix h = generate_channel(SystemDims(100, 600), 11);
  const double n = static_cast<double>(h.size());
  const double mean = h.sum() / n;
  const double var = (h.array() - mean).square().sum() / (n - 1.0);
  CHECK(std::abs(mean) < 0.02);
  CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("channel generation is a pure function of dims and seed") {
  const SystemDims d(8, 12);
  CHECK(generate_channel(d, 42) == generate_channel(d, 42));
  CHECK(generate_channel(d, 42) != generate_channel(d, 43));
}

TEST_CASE("realize with negligible noise gives y = Hx") {
  const SystemInstance inst(generate_channel(SystemDims(5, 9), 3), SourcePrior::homogeneous(5, 1.0), 1e-30);
  const Realization r = realize(inst, 99);
  CHECK((r.y - inst.channel() * r.x).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("make_realization with injected x and n") {
  Matrix h(1, 1);
  h << 2.0;
  const Realization r = make_realization(h, Vector::Constant(1, 0.5), Vector::Constant(1, 0.1));
  CHECK(r.y[0] == doctest::Approx(1.1).epsilon(1e-15));
  CHECK_THROWS_AS(make_realization(h, Vector::Zero(2), Vector::Zero(1)), std::invalid_argument);
}

TEST_CASE("received variance is K sigma_x^2 + sigma_n^2") {
  const SystemDims d(4, 8);
  const double sn2 = 1.0;
  double sum = 0.0;
  double sum_sq = 0.0;
  int count = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const SystemInstance inst(generate_channel(d, derive_seed(s, kChannelStream)), SourcePrior::homogeneous(4, 1.0),
                              sn2);
    const Realization r = realize(inst, s);
    sum += r.y.sum();
    sum_sq += r.y.squaredNorm();
    count += static_cast<int>(r.y.size());
  }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  CHECK(std::abs(var / 5.0 - 1.0) < 0.05);
}

TEST_CASE("sample mse") {
  const Vector x = Vector::LinSpaced(10, -1.0, 2.0);
  CHECK(mse(x, x) == 0.0);

  Vector a(2);
  a << 1.0, 0.0;
  CHECK(mse(a, Vector::Zero(2)) == doctest::Approx(0.5));

  // two-pass oracle on a longer vector
  Engine eng(5);
  std::normal_distribution<double> nd;
  Vector u(100);
  Vector v(100);
  for (Index i = 0; i < 100; ++i) {
    u[i] = nd(eng);
    v[i] = nd(eng);
  }
  double acc = 0.0;
  for (Index i = 0; i < 100; ++i) acc += (u[i] - v[i]) * (u[i] - v[i]);
  CHECK(std::abs(mse(u, v) - acc / 100.0) < 1e-15 * (1.0 + acc));
  CHECK(mse(u, v) == mse(v, u));
  CHECK(mse(u, v) >= 0.0);

  CHECK_THROWS_AS(mse(Vector::Zero(3), Vector::Zero(4)), std::invalid_argument);
}

TEST_CASE("y - Hx - n vanishes for every seed") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const SystemInstance inst = testing::random_instance(6, 10, 10.0, seed);
    const Realization r = realize(inst, seed);
    const double scale = r.y.lpNorm<Eigen::Infinity>();
    CHECK((r.y - inst.channel() * r.x - r.n).lpNorm<Eigen::Infinity>() <= 1e-12 * scale);
  }
}

TEST_CASE("seed derivation separates streams") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t p = 0; p < 50; ++p) {
    seen.insert(derive_seed(p, kChannelStream));
    seen.insert(derive_seed(p, kSourceStream));
    seen.insert(derive_seed(p, kNoiseStream));
  }
  CHECK(seen.size() == 150);
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(mix64(0) != mix64(1));
}

TEST_CASE("invalid construction is rejected") {
  CHECK_THROWS_AS(SystemDims(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(SystemDims(3, 0), std::invalid_argument);
  CHECK_THROWS_AS(SourcePrior(Vector::Constant(2, -1.0)), std::invalid_argument);
  CHECK_THROWS_AS(SourcePrior{Vector{}}, std::invalid_argument);
  CHECK_THROWS_AS(SystemInstance(Matrix::Ones(3, 2), SourcePrior::homogeneous(3, 1.0), 0.1), std::invalid_argument);
  CHECK_THROWS_AS(SystemInstance(Matrix::Ones(3, 2), SourcePrior::homogeneous(2, 1.0), 0.0), std::invalid_argument);

  Vector het(2);
  het << 1.0, 2.0;
  const SystemInstance inst(Matrix::Ones(3, 2), SourcePrior(het), 0.5);
  CHECK_FALSE(inst.prior().is_homogeneous());
  CHECK_THROWS_AS(inst.snr(), std::invalid_argument);
}

TEST_CASE("snr conversion") {
  CHECK(noise_var_from_snr_db(20.0) == doctest::Approx(0.01));
  CHECK(noise_var_from_snr_db(0.0) == 1.0);
  const SystemInstance inst(Matrix::Ones(2, 1), SourcePrior::homogeneous(1, 2.0), 0.5);
  CHECK(inst.snr() == doctest::Approx(4.0));
  CHECK(SystemDims(100, 600).beta() == doctest::Approx(1.0 / 6.0));
}
