#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/SVD>

#include "risbf/nulling.hpp"

using namespace risbf;

namespace {

// brute-force reference: projected gradient on the weighted least squares
CVec projected_gradient_oracle(const ChannelRealization& ch, const RVec& p_w,
                               double alpha_max) {
  const int m = static_cast<int>(ch.pairs.size());
  RVec w(m);
  for (int c = 0; c < m; ++c) w(c) = p_w(ch.pairs[c].second);
  const CMat M = ch.H_b_stack * w.asDiagonal() * ch.H_b_stack.adjoint();
  const CVec b = ch.H_b_stack * ch.h_d_stack.cwiseProduct(w.cast<cplx>());
  Eigen::SelfAdjointEigenSolver<CMat> es(M);
  const double step = 0.9 / std::max(es.eigenvalues().maxCoeff(), 1e-12);

  CVec a = CVec::Zero(ch.Q);
  for (int it = 0; it < 500000; ++it) {
    CVec g = M * a + b;
    CVec an = a - step * g;
    for (int q = 0; q < ch.Q; ++q) {
      const double mag = std::abs(an(q));
      if (mag > alpha_max) an(q) *= alpha_max / mag;
    }
    const double delta = (an - a).norm();
    a = an;
    if (delta < 1e-13 * (1.0 + a.norm())) break;
  }
  return a;
}

double residual_of(const ChannelRealization& ch, const RVec& p_w, const CVec& a) {
  const int m = static_cast<int>(ch.pairs.size());
  double r = 0;
  for (int c = 0; c < m; ++c) {
    const cplx v = ch.h_d_stack(c) + ch.H_b_stack.col(c).dot(a);
    r += p_w(ch.pairs[c].second) * std::norm(v);
  }
  return r;
}

}  // namespace

TEST_CASE("closed form: zero targets give zero vector") {
  auto rng = make_rng(7, 0);
  ChannelRealization ch = sample_iid_setup(12, 3, 20.0, rng);
  ch.h_d.setZero();
  populate_cascade(ch);
  CVec a = nulling_closed_form(ch);
  CHECK(a.norm() == 0.0);
}

TEST_CASE("closed form: identity system") {
  ChannelRealization ch;
  ch.K = 2;
  ch.Q = 2;
  ch.pairs = {{1, 0}, {0, 1}};
  ch.H_b_stack = CMat::Identity(2, 2);
  ch.h_d_stack = CVec(2);
  ch.h_d_stack << cplx(1, 0), cplx(-1, 0);
  CVec a = nulling_closed_form(ch);
  CHECK(std::abs(a(0) - cplx(-1, 0)) < 1e-12);
  CHECK(std::abs(a(1) - cplx(1, 0)) < 1e-12);
}

TEST_CASE("closed form: exact residual and minimum norm") {
  auto rng = make_rng(8, 0);
  ChannelRealization ch = sample_iid_setup(8, 3, 20.0, rng);
  CVec a = nulling_closed_form(ch);
  const double res = (ch.H_b_stack.adjoint() * a + ch.h_d_stack).norm();
  CHECK(res <= 1e-8 * ch.h_d_stack.norm());

  // alternatives via nullspace perturbations must not beat the norm
  Eigen::JacobiSVD<CMat> svd(ch.H_b_stack.adjoint(), Eigen::ComputeFullV);
  const int m = static_cast<int>(ch.pairs.size());
  const CMat N = svd.matrixV().rightCols(ch.Q - m);
  std::normal_distribution<double> n01;
  for (int it = 0; it < 100; ++it) {
    CVec z(N.cols());
    for (int i = 0; i < z.size(); ++i) z(i) = cplx(n01(rng), n01(rng));
    const CVec x = a + N * z;
    CHECK((ch.H_b_stack.adjoint() * x + ch.h_d_stack).norm() <=
          1e-7 * ch.h_d_stack.norm());
    CHECK(a.norm() <= x.norm() + 1e-12);
  }
}

TEST_CASE("closed form: underdetermined and rank-deficient errors") {
  auto rng = make_rng(9, 0);
  ChannelRealization ch = sample_iid_setup(8, 4, 20.0, rng);  // Q=8 < 12 pairs
  bool threw = false;
  try {
    nulling_closed_form(ch);
  } catch (const std::invalid_argument& e) {
    threw = true;
    CHECK(std::string(e.what()).find("the number of REs should be greater than "
                                     "the number of interference channels") !=
          std::string::npos);
  }
  CHECK(threw);

  ChannelRealization ch2 = sample_iid_setup(8, 3, 20.0, rng);
  ch2.H_b_stack.col(1) = ch2.H_b_stack.col(0);  // exact rank drop
  CHECK_THROWS_AS(nulling_closed_form(ch2), std::invalid_argument);
}

TEST_CASE("min interference: unconstrained optimum reachable") {
  auto rng = make_rng(10, 0);
  ChannelRealization ch = sample_iid_setup(10, 3, 20.0, rng);
  const RVec p_w = RVec::Constant(3, 10.0);
  const CVec a_cf = nulling_closed_form(ch);
  const double amax = 2.0 * a_cf.cwiseAbs().maxCoeff();
  MinInterferenceResult r = min_interference_qcqp(ch, p_w, amax);
  REQUIRE(r.status == SolveStatus::optimal);
  const double base = residual_of(ch, p_w, CVec::Zero(ch.Q));
  CHECK(r.residual_power <= 1e-8 * base);
}

TEST_CASE("min interference: alpha = 0") {
  auto rng = make_rng(11, 0);
  ChannelRealization ch = sample_iid_setup(6, 3, 20.0, rng);
  const RVec p_w = RVec::Constant(3, 10.0);
  MinInterferenceResult r = min_interference_qcqp(ch, p_w, 0.0);
  CHECK(r.a.norm() == 0.0);
  CHECK(r.residual_power == doctest::Approx(residual_of(ch, p_w, r.a)).epsilon(1e-12));
}

TEST_CASE("min interference: projected gradient oracle") {
  auto rng = make_rng(12, 0);
  for (int inst = 0; inst < 5; ++inst) {
    ChannelRealization ch = sample_iid_setup(2, 2, 20.0, rng);
    const RVec p_w = RVec::Constant(2, 10.0);
    const double amax = 0.5;
    MinInterferenceResult r = min_interference_qcqp(ch, p_w, amax, 1e-11);
    REQUIRE(r.status == SolveStatus::optimal);
    const CVec ref = projected_gradient_oracle(ch, p_w, amax);
    const double v_ref = residual_of(ch, p_w, ref);
    CHECK(r.residual_power == doctest::Approx(v_ref).epsilon(1e-6));
  }
}

TEST_CASE("min interference: residual antitone in alpha") {
  auto rng = make_rng(13, 0);
  ChannelRealization ch = sample_iid_setup(8, 3, 20.0, rng);
  const RVec p_w = RVec::Constant(3, 10.0);
  double prev = residual_of(ch, p_w, CVec::Zero(ch.Q));
  for (double amax : {0.05, 0.1, 0.2, 0.5, 1.0, 2.0}) {
    MinInterferenceResult r = min_interference_qcqp(ch, p_w, amax);
    REQUIRE(r.status == SolveStatus::optimal);
    CHECK(r.residual_power <= prev * (1.0 + 1e-9) + 1e-12);
    prev = r.residual_power;
  }
}

TEST_CASE("success probability endpoints") {
  NullingTable t =
      nulling_success_probability({8, 16}, {40.0}, 8, 123);
  REQUIRE(t.cells.size() == 2);
  CHECK(t.cells[0].q == 8);
  CHECK(t.cells[0].success_prob == 0.0);  // Q < K(K-1) = 12
  CHECK(t.cells[1].q == 16);
  CHECK(t.cells[1].success_prob == 1.0);

  NullingTable t2 =
      nulling_success_probability({8, 16}, {40.0}, 8, 123);
  for (size_t i = 0; i < t.records.size(); ++i) {
    CHECK(t.records[i].residual_power == t2.records[i].residual_power);
    CHECK(t.records[i].success == t2.records[i].success);
  }
}

TEST_CASE("success probability ordering in records") {
  NullingTable t = nulling_success_probability({4, 6}, {0.0, 20.0}, 3, 5);
  REQUIRE(t.records.size() == 12);
  size_t i = 0;
  for (int q : {4, 6})
    for (double adb : {0.0, 20.0})
      for (int trial = 0; trial < 3; ++trial) {
        CHECK(t.records[i].q == q);
        CHECK(t.records[i].alpha_max_sq_db == adb);
        CHECK(t.records[i].trial == trial);
        ++i;
      }
}
