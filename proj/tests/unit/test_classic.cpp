#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "gmpd/classic.hpp"
#include "gmpd/gmpid.hpp"
#include "gmpd/linalg.hpp"
#include "gmpd/reference.hpp"
#include "support.hpp"

using namespace gmpd;
using testing::random_instance;

namespace {

AffineIteration affine(Matrix b, Vector c) {
  AffineIteration it;
  it.B = std::move(b);
  it.c = std::move(c);
  it.label = "test";
  return it;
}

Matrix random_matrix(Index n, std::uint64_t seed) {
  Engine eng(seed);
  std::normal_distribution<double> nd;
  Matrix a(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) a(i, j) = nd(eng);
  }
  return a;
}

/// Symmetric matrix with spectral radius exactly rho (by its own eigensolve).
Matrix symmetric_with_radius(Index n, double rho, std::uint64_t seed) {
  const Matrix a = random_matrix(n, seed);
  const Matrix s = a + a.transpose();
  const Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  return s * (rho / es.eigenvalues().cwiseAbs().maxCoeff());
}

Vector random_vector(Index n, std::uint64_t seed) { return random_matrix(n, seed).col(0); }

}  // namespace

TEST_CASE("zero B reaches c after one step") {
  Vector c(3);
  c << 1.0, -2.0, 0.5;
  const IterateResult r = iterate(affine(Matrix::Zero(3, 3), c), Vector::Zero(3), 1e-12, 10);
  CHECK(r.trace.front().change == doctest::Approx(2.0));
  CHECK(r.x == c);
  CHECK(r.terminated == Termination::Converged);
  CHECK(r.iterations <= 2);
}

TEST_CASE("half identity halves the error each step") {
  const Vector c = Vector::Ones(2);
  TraceProbe probe;
  probe.oracle = Vector::Constant(2, 2.0);
  const IterateResult r = iterate(affine(0.5 * Matrix::Identity(2, 2), c), Vector::Zero(2), 1e-13, 200, probe);
  CHECK((r.x - Vector::Constant(2, 2.0)).lpNorm<Eigen::Infinity>() < 1e-12);
  for (std::size_t t = 1; t < 20; ++t) {
    CHECK(*r.trace[t].oracle_error / *r.trace[t - 1].oracle_error == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("contractive iteration reaches the dense fixed point") {
  const Index n = 20;
  const Matrix b = symmetric_with_radius(n, 0.8, 1);
  const Vector c = random_vector(n, 2);
  const Vector fixed = (Matrix::Identity(n, n) - b).colPivHouseholderQr().solve(c);
  const IterateResult r = iterate(affine(b, c), Vector::Zero(n), 1e-13, 10000);
  CHECK(r.terminated == Termination::Converged);
  CHECK((r.x - fixed).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("sufficient convergence conditions") {
  const ConvergenceReport zero = check_proposition1(Matrix::Zero(4, 4));
  CHECK(zero.spectral_radius == 0.0);
  CHECK(zero.diag_dominant);
  CHECK(zero.predicted_converges);

  const ConvergenceReport two = check_proposition1(2.0 * Matrix::Identity(3, 3));
  CHECK(two.spectral_radius == doctest::Approx(2.0));
  CHECK_FALSE(two.diag_dominant);
  CHECK_FALSE(two.predicted_converges);

  CHECK_THROWS_AS(check_proposition1(Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST_CASE("message-passing mean matrix radius at beta = 1/6") {
  const SystemInstance inst = random_instance(200, 1200, 20.0, 5);
  const double gamma = variance_fixed_point(inst).gamma;
  const ConvergenceReport rep = check_proposition1(gmpid_iteration_matrix(inst, gamma));
  const double beta = 1.0 / 6.0;
  CHECK(std::abs(rep.spectral_radius / (beta + 2.0 * std::sqrt(beta)) - 1.0) < 0.10);
}

TEST_CASE("jacobi examples") {
  Matrix h(3, 1);
  h << 1.0, 2.0, -1.0;
  const SystemInstance one(h, SourcePrior::homogeneous(1, 1.0), 0.1);
  const Vector y = Vector::Ones(3);
  const AffineIteration jac = jacobi_for_mmse(one, y);
  CHECK(jac.B.norm() == 0.0);
  const DetectionResult r = run_affine_detector(jac, 1e-12, 10);
  CHECK(std::abs(r.x_hat[0] - mmse_detect(one, y).x_hat[0]) < 1e-14);

  // beta = 1/3 lies above the Jacobi threshold
  const SystemInstance heavy = random_instance(100, 300, 20.0, 8);
  const AffineIteration hj = jacobi_for_mmse(heavy, realize(heavy, 8).y);
  CHECK_FALSE(check_proposition1(hj.B).predicted_converges);
  CHECK(run_affine_detector(hj, 1e-10, 500).terminated == Termination::Diverged);

  const SystemInstance light = random_instance(20, 400, 20.0, 9);
  const Vector yl = realize(light, 9).y;
  const DetectionResult lr = run_affine_detector(jacobi_for_mmse(light, yl), 1e-14, 5000);
  CHECK((lr.x_hat - mmse_detect(light, yl).x_hat).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("richardson examples") {
  Matrix h(2, 1);
  h << 1.0, 1.0;
  const SystemInstance one(h, SourcePrior::homogeneous(1, 1.0), 0.5);
  const Vector y = Vector::Constant(2, 0.4);
  const NormalEquations ne = mmse_normal_equations(one, y);
  const AffineIteration it = richardson_for_mmse(one, y, 1.0 / ne.A(0, 0));
  CHECK(std::abs(it.B(0, 0)) < 1e-15);
  const IterateResult r = iterate(it, Vector::Zero(1), 1e-14, 10);
  CHECK(std::abs(r.trace.front().change - std::abs(r.x[0])) < 1e-15);
  CHECK(std::abs(r.x[0] - mmse_detect(one, y).x_hat[0]) < 1e-15);

  const SystemInstance inst = random_instance(200, 300, 20.0, 12);
  const Vector yy = realize(inst, 12).y;
  const AffineIteration auto_w = richardson_for_mmse(inst, yy);
  const Vector oracle = mmse_detect(inst, yy).x_hat;
  const DetectionResult rr = run_affine_detector(auto_w, 1e-12, 20000);
  CHECK(rr.terminated == Termination::Converged);
  CHECK(testing::rel_error(rr.x_hat, oracle) < 1e-6);

  // optimal omega gives rho = (lmax - lmin) / (lmax + lmin)
  const NormalEquations big = mmse_normal_equations(inst, yy);
  const Eigen::SelfAdjointEigenSolver<Matrix> es(big.A);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  CHECK(std::abs(linalg::spectral_radius(auto_w.B) - (hi - lo) / (hi + lo)) < 1e-8);

  CHECK_THROWS_AS(richardson_for_mmse(inst, yy, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(richardson_for_mmse(inst, yy, -1.0), std::invalid_argument);
}

TEST_CASE("fixed point does not depend on the start") {
  const Index n = 15;
  const Matrix b = symmetric_with_radius(n, 0.7, 21);
  const Vector c = random_vector(n, 22);
  const double eps = 1e-12;
  const Vector base = iterate(affine(b, c), Vector::Zero(n), eps, 10000).x;
  for (std::uint64_t s = 30; s < 33; ++s) {
    const Vector x0 = 10.0 * random_vector(n, s);
    const IterateResult r = iterate(affine(b, c), x0, eps, 10000);
    CHECK(r.terminated == Termination::Converged);
    CHECK((r.x - base).lpNorm<Eigen::Infinity>() < 10.0 * eps);
  }
}

TEST_CASE("expanding iteration is flagged as diverged") {
  const Index n = 12;
  for (std::uint64_t s = 40; s < 45; ++s) {
    const Matrix b = symmetric_with_radius(n, 1.2, s);
    const IterateResult r = iterate(affine(b, random_vector(n, s + 1)), random_vector(n, s + 2), 1e-10, 500);
    CHECK(r.terminated == Termination::Diverged);
    CHECK(r.iterations <= 500);
  }
}

TEST_CASE("per-step cost is quadratic") {
  for (const Index n : {10, 100, 1000}) {
    const double ratio = static_cast<double>(affine_step_flops(n)) / static_cast<double>(n * n);
    CHECK(ratio >= 1.0);
    CHECK(ratio <= 4.0);
  }
  const IterateResult r = iterate(affine(Matrix::Zero(4, 4), Vector::Ones(4)), Vector::Zero(4), 1e-12, 3);
  CHECK(r.flops == r.iterations * affine_step_flops(4));
}

TEST_CASE("affine detector reports the diagonal variances") {
  const SystemInstance inst = random_instance(5, 20, 10.0, 3);
  const Vector y = realize(inst, 3).y;
  const AffineIteration jac = jacobi_for_mmse(inst, y);
  IterationTrace trace;
  const DetectionResult r = run_affine_detector(jac, 1e-12, 1000, {}, &trace);
  CHECK(static_cast<int>(trace.size()) == r.iterations);
  CHECK((r.post_var - jac.precision_diag.cwiseInverse()).norm() == 0.0);
  CHECK(r.flops > jac.setup_flops);
}

TEST_CASE("iterate validates its inputs") {
  const AffineIteration it = affine(Matrix::Zero(2, 2), Vector::Ones(2));
  CHECK_THROWS_AS(iterate(it, Vector::Zero(3), 1e-8, 10), std::invalid_argument);
  CHECK_THROWS_AS(iterate(it, Vector::Zero(2), 0.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(iterate(it, Vector::Zero(2), 1e-8, 0), std::invalid_argument);
}
