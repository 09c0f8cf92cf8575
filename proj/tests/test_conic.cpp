#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "risbf/conic.hpp"

using namespace risbf;

namespace {

CVec random_cvec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  CVec a(n);
  for (int q = 0; q < n; ++q) a(q) = scale * cplx(n01(rng), n01(rng));
  return a;
}

}  // namespace

TEST_CASE("qcqp: max -||a||^2 in unit box") {
  ConvexQuadraticProgram p;
  p.Q = 3;
  p.has_quad = true;
  p.quad.d = RVec::Ones(3);
  p.u = RVec::Ones(3);
  QcqpResult r = solve_qcqp(p, 1e-8);
  CHECK(r.status == SolveStatus::optimal);
  CHECK(std::abs(r.objective) < 1e-7);
  CHECK(r.a.norm() < 1e-3);
}

TEST_CASE("qcqp: completed square interior optimum") {
  auto rng = make_rng(31, 0);
  for (int it = 0; it < 10; ++it) {
    const int Q = 4;
    CVec c = random_cvec(Q, rng);
    ConvexQuadraticProgram p;
    p.Q = Q;
    p.has_quad = true;
    p.quad.l = c;
    p.quad.d = RVec::Ones(Q);
    p.u = RVec::Constant(Q, 10.0);
    QcqpResult r = solve_qcqp(p, 1e-9);
    CHECK(r.status == SolveStatus::optimal);
    CHECK(std::abs(r.objective - c.squaredNorm()) <= 1e-6 * c.squaredNorm());
    CHECK((r.a - c).norm() <= 1e-3 * c.norm());
  }
}

TEST_CASE("qcqp: linear objective on quadratic ball") {
  auto rng = make_rng(32, 0);
  const int Q = 5;
  CVec c = random_cvec(Q, rng);
  ConvexQuadraticProgram p;
  p.Q = Q;
  p.has_quad = true;
  p.quad.l = c;
  QuadForm ball;
  ball.c0 = 1.0;
  ball.d = RVec::Ones(Q);
  p.cons.push_back(ball);
  p.u = RVec::Constant(Q, 100.0);
  QcqpResult r = solve_qcqp(p, 1e-9);
  CHECK(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(2.0 * c.norm()).epsilon(1e-5));
  CHECK((r.a - c / c.norm()).norm() < 1e-3);
}

TEST_CASE("qcqp: log objective with interior stationary point") {
  auto rng = make_rng(33, 0);
  const int Q = 4;
  CVec c = random_cvec(Q, rng, 0.5);
  ConvexQuadraticProgram p;
  p.Q = Q;
  QuadForm lg;
  lg.c0 = 1.0;
  lg.l = c;
  lg.d = RVec::Ones(Q);
  p.logs.push_back(lg);
  p.u = RVec::Constant(Q, 50.0);
  QcqpResult r = solve_qcqp(p, 1e-9);
  CHECK(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(std::log(1.0 + c.squaredNorm())).epsilon(1e-7));
  CHECK((r.a - c).norm() < 1e-4);
}

TEST_CASE("qcqp: least squares box-constrained vs random search") {
  auto rng = make_rng(34, 0);
  const int Q = 4, m = 2;
  CMat H(Q, m);
  for (int c = 0; c < m; ++c) H.col(c) = random_cvec(Q, rng);
  CVec h = random_cvec(m, rng);
  const double u = 0.15;  // binding box

  ConvexQuadraticProgram p;
  p.Q = Q;
  p.has_quad = true;
  p.quad.c0 = -h.squaredNorm();
  p.quad.l = -(H * h);
  p.quad.F = H;
  p.u = RVec::Constant(Q, u);
  QcqpResult r = solve_qcqp(p, 1e-10);
  CHECK(r.status == SolveStatus::optimal);
  const double solver_res = (H.adjoint() * r.a + h).squaredNorm();
  CHECK(solver_res == doctest::Approx(-r.objective).epsilon(1e-9));

  double best = h.squaredNorm();
  std::uniform_real_distribution<double> ur(-u, u);
  for (int it = 0; it < 1000000; ++it) {
    CVec a(Q);
    for (int q = 0; q < Q; ++q) {
      double re = ur(rng), im = ur(rng);
      // keep draws inside the modulus ball
      const double mag = std::hypot(re, im);
      if (mag > u) {
        re *= u / mag;
        im *= u / mag;
      }
      a(q) = cplx(re, im);
    }
    best = std::min(best, (H.adjoint() * a + h).squaredNorm());
  }
  CHECK(solver_res <= best + 1e-9);
  CHECK(solver_res >= best - 0.05 * best - 1e-9);
}

TEST_CASE("qcqp determinism") {
  auto rng = make_rng(35, 0);
  ConvexQuadraticProgram p;
  p.Q = 3;
  p.has_quad = true;
  p.quad.l = random_cvec(3, rng);
  p.quad.d = RVec::Ones(3);
  p.u = RVec::Ones(3);
  QcqpResult a = solve_qcqp(p, 1e-8);
  QcqpResult b = solve_qcqp(p, 1e-8);
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
}

TEST_CASE("sdp: unit diagonal pin") {
  SemidefiniteProgram p;
  p.n = 2;
  p.C.dg = RVec::Ones(2);
  SdpConstraint c;
  c.G.dg = RVec::Zero(2);
  c.G.dg(0) = 1.0;
  c.rhs = 1.0;
  c.sense = ConSense::eq;
  p.cons.push_back(c);
  SdpResult r = solve_sdp(p, 1e-8);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::real(r.A(0, 0)) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::real(r.A(1, 1)) < 1e-5);
}

TEST_CASE("sdp: min eigenvalue via unit trace") {
  auto rng = make_rng(36, 0);
  const int n = 4;
  CMat B(n, n);
  for (int c = 0; c < n; ++c) B.col(c) = random_cvec(n, rng);
  CMat Cm = B * B.adjoint() + CMat::Identity(n, n);
  Eigen::SelfAdjointEigenSolver<CMat> es(Cm);

  SemidefiniteProgram p;
  p.n = n;
  p.C.W = es.eigenvectors();
  p.C.ws = es.eigenvalues();
  SdpConstraint c;
  c.G.dg = RVec::Ones(n);
  c.rhs = 1.0;
  c.sense = ConSense::eq;
  p.cons.push_back(c);
  SdpResult r = solve_sdp(p, 1e-9);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(es.eigenvalues()(0)).epsilon(1e-5));
}

TEST_CASE("sdp: box constraints and feasibility verdicts") {
  SemidefiniteProgram p;
  p.n = 2;
  p.C.dg = RVec::Zero(2);
  p.C.dg(0) = 1.0;
  SdpConstraint box;
  box.G.dg = RVec::Zero(2);
  box.G.dg(0) = 1.0;
  box.rhs = 1.0;
  box.sense = ConSense::le;
  p.cons.push_back(box);
  SdpConstraint unit;
  unit.G.dg = RVec::Zero(2);
  unit.G.dg(1) = 1.0;
  unit.rhs = 1.0;
  unit.sense = ConSense::eq;
  p.cons.push_back(unit);
  SdpConstraint lo;
  lo.G.dg = RVec::Zero(2);
  lo.G.dg(0) = 1.0;
  lo.rhs = 0.5;
  lo.sense = ConSense::ge;
  p.cons.push_back(lo);

  SdpResult r = solve_sdp(p, 1e-8);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.objective == doctest::Approx(0.5).epsilon(1e-5));

  // flip the lower bound into an impossible requirement
  p.cons[2].G.dg(0) = -1.0;
  p.cons[2].rhs = 1.0;
  SdpResult ri = solve_sdp(p, 1e-8);
  CHECK(ri.status == SolveStatus::infeasible);
}

TEST_CASE("sdp determinism") {
  SemidefiniteProgram p;
  p.n = 3;
  p.C.dg = RVec::Ones(3);
  SdpConstraint c;
  c.G.dg = RVec::Ones(3);
  c.rhs = 2.0;
  c.sense = ConSense::eq;
  p.cons.push_back(c);
  SdpResult a = solve_sdp(p, 1e-8);
  SdpResult b = solve_sdp(p, 1e-8);
  CHECK(a.objective == b.objective);
}
