#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "risbf/system_model.hpp"

using namespace risbf;

namespace {

CVec random_cvec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n01;
  CVec a(n);
  for (int q = 0; q < n; ++q) a(q) = scale * cplx(n01(rng), n01(rng));
  return a;
}

// direct sum-of-squares evaluation of the SINR denominator
double direct_denominator(const ChannelRealization& ch, const RVec& p, double sr2,
                          double ss2, int k, const CVec& a) {
  double v = ss2;
  for (int j = 0; j < ch.K; ++j) {
    if (j == k) continue;
    v += p(j) * std::norm(ch.h_d(k, j) + ch.h_b(k, j).dot(a));
  }
  for (int q = 0; q < ch.Q; ++q) v += sr2 * std::norm(ch.H_r(q, k)) * std::norm(a(q));
  return v;
}

}  // namespace

TEST_CASE("decomposition matches direct evaluation") {
  auto rng = make_rng(21, 0);
  ChannelRealization ch = sample_iid_setup(4, 3, 10.0, rng);
  RVec p(3);
  p << 1.5, 0.7, 2.2;
  const double sr2 = 0.3, ss2 = 0.9;
  SinrDecomposition dec = sinr_decomposition(ch, p, sr2, ss2);
  for (int it = 0; it < 50; ++it) {
    CVec a = random_cvec(4, rng);
    for (int k = 0; k < 3; ++k) {
      const double want = direct_denominator(ch, p, sr2, ss2, k, a);
      const double got = denominator(dec, k, a);
      CHECK(std::abs(want - got) <= 1e-10 * std::abs(want));
    }
  }
}

TEST_CASE("decomposition at a = 0 gives C_k") {
  auto rng = make_rng(22, 0);
  ChannelRealization ch = sample_iid_setup(6, 4, 20.0, rng);
  RVec p = RVec::Constant(4, 10.0);
  SinrDecomposition dec = sinr_decomposition(ch, p, 0.5, 1.0);
  const CVec a0 = CVec::Zero(6);
  for (int k = 0; k < 4; ++k) {
    CHECK(denominator(dec, k, a0) == doctest::Approx(dec.C(k)));
    CHECK(dec.C(k) >= 1.0);
  }
}

TEST_CASE("passive decomposition drops RIS noise") {
  auto rng = make_rng(23, 0);
  ChannelRealization ch = sample_iid_setup(5, 3, 20.0, rng);
  RVec p = RVec::Constant(3, 1.0);
  SinrDecomposition dec = sinr_decomposition(ch, p, 0.0, 1.0);
  for (int k = 0; k < 3; ++k) CHECK(dec.R_r_diag[k].norm() == 0.0);
}

TEST_CASE("rates with a = 0 reduce to direct-only SINR") {
  auto rng = make_rng(24, 0);
  ChannelRealization ch = sample_iid_setup(4, 3, 20.0, rng);
  RVec p(3);
  p << 2.0, 3.0, 4.0;
  const double ss2 = 1.3;
  RVec r = achievable_rates(CVec::Zero(4), ch, p, 0.7, ss2, RateMode::active, 2.0);
  for (int k = 0; k < 3; ++k) {
    double den = ss2;
    for (int j = 0; j < 3; ++j)
      if (j != k) den += p(j) * std::norm(ch.h_d(k, j));
    const double want = std::log2(1.0 + p(k) * std::norm(ch.h_d(k, k)) / den);
    CHECK(r(k) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("single-user rate") {
  auto rng = make_rng(25, 0);
  ChannelRealization ch = sample_iid_setup(4, 1, 20.0, rng);
  RVec p = RVec::Constant(1, 5.0);
  RVec r = achievable_rates(CVec::Zero(4), ch, p, 0.0, 2.0, RateMode::active, 2.0);
  CHECK(r(0) == doctest::Approx(std::log2(1.0 + 5.0 * std::norm(ch.h_d(0, 0)) / 2.0)));
}

TEST_CASE("rate amplitude guard") {
  auto rng = make_rng(26, 0);
  ChannelRealization ch = sample_iid_setup(3, 2, 20.0, rng);
  RVec p = RVec::Constant(2, 1.0);
  CVec a = CVec::Constant(3, cplx(1.5, 0.0));
  CHECK_THROWS_AS(achievable_rates(a, ch, p, 0.0, 1.0, RateMode::passive, 1.0),
                  std::invalid_argument);
  CHECK_NOTHROW(achievable_rates(a, ch, p, 0.0, 1.0, RateMode::active, 2.0));
}

TEST_CASE("rates continuous in a") {
  auto rng = make_rng(27, 0);
  ChannelRealization ch = sample_iid_setup(4, 3, 20.0, rng);
  RVec p = RVec::Constant(3, 10.0);
  for (int it = 0; it < 20; ++it) {
    CVec a = random_cvec(4, rng, 0.3);
    CVec da = random_cvec(4, rng, 1e-6);
    RVec r1 = achievable_rates(a, ch, p, 0.1, 1.0, RateMode::active, 10.0);
    RVec r2 = achievable_rates(a + da, ch, p, 0.1, 1.0, RateMode::active, 10.0);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-3);
  }
}

TEST_CASE("ep diagonal") {
  auto rng = make_rng(28, 0);
  ChannelRealization ch = sample_iid_setup(5, 3, 20.0, rng);
  RVec p(3);
  p << 1.0, 2.0, 3.0;
  RVec ep = ep_diag(ch.H_t, p, 0.25);
  CMat full = ch.H_t * p.asDiagonal() * ch.H_t.adjoint();
  for (int q = 0; q < 5; ++q) {
    CHECK(ep(q) == doctest::Approx(std::real(full(q, q)) + 0.25));
    CHECK(ep(q) > 0.0);
  }
}

TEST_CASE("power models") {
  auto rng = make_rng(29, 0);
  ChannelRealization ch = sample_iid_setup(64, 4, 20.0, rng);
  RVec p = RVec::Constant(4, dbm_to_watt(23.0));
  PowerModel sparse{PowerModelKind::ActiveSparse, dbm_to_watt(-6.0), dbm_to_watt(-10.0), 1.25};
  PowerModel orig = sparse;
  orig.kind = PowerModelKind::ActiveOriginal;
  PowerModel passive = sparse;
  passive.kind = PowerModelKind::Passive;

  const CVec zero = CVec::Zero(64);
  CHECK(power_consumption(zero, ch.H_t, p, 1e-13, sparse) == 0.0);
  CHECK(power_consumption(zero, ch.H_t, p, 1e-13, orig) ==
        doctest::Approx(64 * (dbm_to_watt(-6.0) + dbm_to_watt(-10.0))));
  CHECK(power_consumption(zero, ch.H_t, p, 1e-13, orig) == doctest::Approx(0.0224761).epsilon(1e-4));
  CHECK(power_consumption(zero, ch.H_t, p, 1e-13, passive) ==
        doctest::Approx(64 * dbm_to_watt(-10.0)));

  for (int it = 0; it < 50; ++it) {
    CVec a = random_cvec(64, rng);
    CHECK(power_consumption(a, ch.H_t, p, 1e-13, sparse) ==
          doctest::Approx(power_consumption(a, ch.H_t, p, 1e-13, orig)));
    CVec az = a;
    az(it % 64) = 0.0;
    az((it * 7 + 3) % 64) = 0.0;
    CHECK(power_consumption(az, ch.H_t, p, 1e-13, sparse) <
          power_consumption(az, ch.H_t, p, 1e-13, orig));
  }
}

TEST_CASE("ea diagonal formula") {
  PowerModel pm{PowerModelKind::ActiveSparse, 2e-4, 1e-4, 1.25};
  RVec beta(3), ep(3);
  beta << 1.0, 10.0, 100.0;
  ep << 0.5, 0.25, 0.125;
  RVec ea = ea_diag(beta, ep, pm);
  for (int q = 0; q < 3; ++q)
    CHECK(ea(q) == doctest::Approx(3e-4 * beta(q) + 1.25 * ep(q)));
}
