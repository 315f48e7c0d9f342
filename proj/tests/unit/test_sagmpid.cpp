#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "gmpd/analysis.hpp"
#include "gmpd/linalg.hpp"
#include "gmpd/reference.hpp"
#include "gmpd/sagmpid.hpp"
#include "support.hpp"

using namespace gmpd;
using testing::random_instance;
using testing::rel_error;

namespace {

double gamma_of(const SystemInstance& inst) { return variance_fixed_point(inst).gamma; }

/// First iteration whose decision is within rel of the oracle; max_iter + 1 if never.
int iterations_to_reach(const IterationTrace& trace, const Vector& oracle, double rel, int max_iter) {
  for (const auto& rec : trace) {
    if (*rec.oracle_error / oracle.norm() < rel) return rec.t;
  }
  return max_iter + 1;
}

}  // namespace

TEST_CASE("model matrix examples") {
  Matrix q = Matrix::Zero(3, 2);
  q(0, 0) = 1.0;
  q(2, 1) = 1.0;
  const SystemInstance orth(q, SourcePrior::homogeneous(2, 1.0), 0.1);
  CHECK(build_A(orth, 0.3) == Matrix::Identity(2, 2));

  Matrix h(2, 2);
  h << 1, 1, 0, 0;
  const SystemInstance same(h, SourcePrior::homogeneous(2, 1.0), 0.1);
  Matrix expected(2, 2);
  expected << 1.0, 0.5, 0.5, 1.0;
  CHECK((build_A(same, 0.5) - expected).norm() < 1e-15);
  CHECK_THROWS_AS(build_A(same, 0.0), std::invalid_argument);
}

TEST_CASE("model matrix spectrum follows the singular-value band") {
  const SystemInstance inst = random_instance(50, 400, 20.0, 1);
  const Matrix a = build_A(inst, gamma_of(inst));
  const auto ev = linalg::extreme_eigenvalues(a);
  const double beta = 50.0 / 400.0;
  const double m = 400.0;
  const double g = gamma_of(inst);
  // A = gamma (H^T H) - gamma D + I with D close to M I
  const double lo = g * m * (1.0 - std::sqrt(beta)) * (1.0 - std::sqrt(beta)) - g * m + 1.0;
  const double hi = g * m * (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta)) - g * m + 1.0;
  CHECK(ev.min > lo - 0.1 * (hi - lo));
  CHECK(ev.max < hi + 0.1 * (hi - lo));
}

TEST_CASE("relaxation choices") {
  const SystemInstance third = random_instance(100, 300, 20.0, 2);
  CHECK(choose_w(third, gamma_of(third), RelaxationMode::AsymptoticBeta).w == doctest::Approx(0.75));

  Matrix q = Matrix::Zero(3, 2);
  q(0, 0) = 1.0;
  q(1, 1) = 1.0;
  const SystemInstance orth(q, SourcePrior::homogeneous(2, 1.0), 0.1);
  const RelaxationChoice unit = choose_w(orth, 0.4, RelaxationMode::ExactEigen);
  CHECK(unit.w == doctest::Approx(1.0));
  CHECK(linalg::spectral_radius(sagmpid_iteration_matrix(orth, 0.4, unit.w)) < 1e-15);

  const SystemInstance inst = random_instance(100, 600, 20.0, 3);
  const double g = gamma_of(inst);
  const RelaxationChoice bound = choose_w(inst, g, RelaxationMode::GershgorinBound);
  const auto ev = linalg::extreme_eigenvalues(build_A(inst, g));
  CHECK(bound.w <= 2.0 / ev.max);
  CHECK(bound.w > 0.0);

  const RelaxationChoice exact = choose_w(inst, g, RelaxationMode::ExactEigen);
  CHECK(exact.admissible.value());
  CHECK(exact.w == doctest::Approx(2.0 / (ev.min + ev.max)));
  CHECK(choose_w_auto(inst, g).mode == RelaxationMode::ExactEigen);

  CHECK_THROWS_AS(choose_w(inst, g, RelaxationMode::Manual), std::invalid_argument);
  CHECK_THROWS_AS(choose_w(inst, g, RelaxationMode::Manual, 0.0), std::invalid_argument);
  CHECK(choose_w(inst, g, RelaxationMode::Manual, 0.3).w == 0.3);

  const SystemInstance over = random_instance(60, 40, 20.0, 4);
  CHECK_THROWS_AS(choose_w(over, gamma_of(over), RelaxationMode::AsymptoticBeta), std::invalid_argument);
  CHECK(to_string(RelaxationMode::GershgorinBound) == "bound");
}

TEST_CASE("unit relaxation reproduces plain message passing bit for bit") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const SystemInstance inst = random_instance(20, 60, 10.0, seed);
    const Vector y = realize(inst, seed).y;
    std::vector<MessageState> plain;
    std::vector<MessageState> relaxed;
    GmpidOptions opt;
    opt.max_iter = 25;
    opt.eps = 1e-300;
    opt.on_state = [&](int, const MessageState& s) { plain.push_back(s); };
    const GmpidOutput a = gmpid_detect(inst, y, opt);
    opt.on_state = [&](int, const MessageState& s) { relaxed.push_back(s); };
    RelaxationChoice one;
    one.mode = RelaxationMode::Manual;
    one.w = 1.0;
    const GmpidOutput b = sagmpid_detect(inst, y, one, opt);
    REQUIRE(plain.size() == relaxed.size());
    for (std::size_t t = 0; t < plain.size(); ++t) CHECK(plain[t] == relaxed[t]);
    CHECK(a.result.x_hat == b.result.x_hat);
  }
}

TEST_CASE("relaxation rescues the 1000 x 1500 system") {
  const SystemInstance inst = random_instance(1000, 1500, 20.0, 5);
  const Vector y = realize(inst, 5).y;
  GmpidOptions opt;
  opt.max_iter = 100;
  opt.eps = 1e-300;
  opt.probe.oracle = mmse_detect(inst, y).x_hat;
  const GmpidOutput sa = sagmpid_detect(inst, y, choose_w_auto(inst, gamma_of(inst)), opt);
  const GmpidOutput gm = gmpid_detect(inst, y, opt);
  CHECK(sa.result.terminated != Termination::Diverged);
  CHECK(*sa.trace.back().oracle_error < 0.5 * *sa.trace[9].oracle_error);
  const bool gm_diverges =
      gm.result.terminated == Termination::Diverged || *gm.trace.back().oracle_error > *gm.trace[9].oracle_error;
  CHECK(gm_diverges);
}

TEST_CASE("relaxation converges in fewer iterations at K=10, M=60") {
  double sa_total = 0.0;
  double gm_total = 0.0;
  const int max_iter = 20;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const SystemInstance inst = random_instance(10, 60, 20.0, seed);
    const Vector y = realize(inst, seed).y;
    GmpidOptions opt;
    opt.max_iter = max_iter;
    opt.eps = 1e-300;
    opt.probe.oracle = mmse_detect(inst, y).x_hat;
    const GmpidOutput sa = sagmpid_detect(inst, y, choose_w_auto(inst, gamma_of(inst)), opt);
    const GmpidOutput gm = gmpid_detect(inst, y, opt);
    sa_total += iterations_to_reach(sa.trace, *opt.probe.oracle, 1e-2, max_iter);
    gm_total += iterations_to_reach(gm.trace, *opt.probe.oracle, 1e-2, max_iter);
  }
  CHECK(sa_total < gm_total);
}

TEST_CASE("error propagation matrix examples") {
  const SystemInstance inst = random_instance(80, 320, 20.0, 6);
  const double g = gamma_of(inst);
  const auto ev = linalg::extreme_eigenvalues(build_A(inst, g));
  const double w = 2.0 / (ev.min + ev.max);
  CHECK(std::abs(linalg::spectral_radius(sagmpid_iteration_matrix(inst, g, w)) - (ev.max - ev.min) / (ev.max + ev.min)) <
        1e-8);

  const SystemInstance big = random_instance(200, 1200, 20.0, 7);
  const double beta = 1.0 / 6.0;
  const double rho = linalg::spectral_radius(sagmpid_iteration_matrix(big, gamma_of(big), 1.0 / (1.0 + beta)));
  CHECK(std::abs(rho / sagmpid_asymptotic_radius(beta) - 1.0) < 0.10);
}

TEST_CASE("admissible relaxation decays at the predicted rate") {
  const SystemInstance inst = random_instance(100, 400, 70.0, 8);
  const Vector y = realize(inst, 8).y;
  const double g = gamma_of(inst);
  const RelaxationChoice relax = choose_w(inst, g, RelaxationMode::ExactEigen);
  REQUIRE(relax.admissible.value());
  GmpidOptions opt;
  opt.eps = 1e-300;
  opt.max_iter = 3000;
  const Vector fixed = sagmpid_detect(inst, y, relax, opt).result.x_hat;
  opt.max_iter = 60;
  opt.probe.oracle = fixed;
  const GmpidOutput run = sagmpid_detect(inst, y, relax, opt);
  const double rate = std::pow(*run.trace[59].oracle_error / *run.trace[9].oracle_error, 1.0 / 50.0);
  const double predicted = linalg::spectral_radius(sagmpid_iteration_matrix(inst, g, relax.w));
  CHECK(std::abs(rate / predicted - 1.0) < 0.15);
}

TEST_CASE("relaxed radius is below the plain radius") {
  for (const double beta : {0.25, 0.5, 0.8}) {
    const Index m = static_cast<Index>(std::llround(200.0 / beta));
    const SystemInstance inst = random_instance(200, m, 20.0, 9);
    const double g = gamma_of(inst);
    const double plain = linalg::spectral_radius(gmpid_iteration_matrix(inst, g));
    const double relaxed = linalg::spectral_radius(sagmpid_iteration_matrix(inst, g, 1.0 / (1.0 + beta)));
    CHECK(relaxed < plain);
  }
}

TEST_CASE("variances are untouched by the relaxation") {
  const SystemInstance inst = random_instance(15, 40, 10.0, 10);
  const Vector y = realize(inst, 10).y;
  std::vector<MessageState> plain;
  std::vector<MessageState> relaxed;
  GmpidOptions opt;
  opt.max_iter = 20;
  opt.eps = 1e-300;
  opt.on_state = [&](int, const MessageState& s) { plain.push_back(s); };
  gmpid_detect(inst, y, opt);
  opt.on_state = [&](int, const MessageState& s) { relaxed.push_back(s); };
  sagmpid_detect(inst, y, choose_w(inst, gamma_of(inst), RelaxationMode::AsymptoticBeta), opt);
  REQUIRE(plain.size() == relaxed.size());
  for (std::size_t t = 0; t < plain.size(); ++t) {
    CHECK(plain[t].W_us == relaxed[t].W_us);
    CHECK(plain[t].W_su == relaxed[t].W_su);
  }
}

TEST_CASE("decision agrees with the outgoing messages at convergence") {
  const SystemInstance inst = random_instance(30, 120, 30.0, 11);
  const Vector y = realize(inst, 11).y;
  GmpidOptions opt;
  opt.eps = 1e-14;
  opt.max_iter = 5000;
  const GmpidOutput out = sagmpid_detect(inst, y, choose_w_auto(inst, gamma_of(inst)), opt);
  CHECK(out.result.terminated == Termination::Converged);
  CHECK(rel_error(out.result.x_hat, out.state.E_us.col(0)) < 1e-8);
}

TEST_CASE("relaxed iteration costs at most twice a plain one") {
  const SystemInstance inst = random_instance(50, 300, 20.0, 12);
  const Vector y = realize(inst, 12).y;
  GmpidOptions opt;
  opt.max_iter = 4;
  opt.eps = 1e-300;
  const GmpidOutput gm = gmpid_detect(inst, y, opt);
  const GmpidOutput sa = sagmpid_detect(inst, y, choose_w(inst, gamma_of(inst), RelaxationMode::AsymptoticBeta), opt);
  const double plain = static_cast<double>(gm.trace[3].flops - gm.trace[2].flops);
  const double relaxed = static_cast<double>(sa.trace[3].flops - sa.trace[2].flops);
  CHECK(relaxed > plain);
  CHECK(relaxed <= 2.0 * plain);
  CHECK_THROWS_AS(sagmpid_detect(inst, y, RelaxationChoice{RelaxationMode::Manual, 0.0}, opt), std::invalid_argument);
}
