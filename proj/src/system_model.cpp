#include "risbf/system_model.hpp"

#include <stdexcept>

namespace risbf {

SinrDecomposition sinr_decomposition(const ChannelRealization& ch, const RVec& p_w,
                                     double sigma_r2, double sigma_s2) {
  const int K = ch.K, Q = ch.Q;
  SinrDecomposition dec;
  dec.K = K;
  dec.Q = Q;
  dec.sigma_r2 = sigma_r2;
  dec.sigma_s2 = sigma_s2;
  dec.R_r_diag.resize(K);
  dec.L_b.resize(K);
  dec.g.resize(K);
  dec.C.resize(K);
  dec.h_dd.resize(K);
  dec.h_bb.resize(K);
  for (int k = 0; k < K; ++k) {
    dec.R_r_diag[k] = sigma_r2 * ch.H_r.col(k).cwiseAbs2();
    dec.L_b[k].resize(Q, K - 1);
    dec.g[k] = CVec::Zero(Q);
    double c = sigma_s2;
    int col = 0;
    for (int j = 0; j < K; ++j) {
      if (j == k) continue;
      const CVec hb = ch.h_b(k, j);
      dec.L_b[k].col(col++) = std::sqrt(p_w(j)) * hb;
      dec.g[k] += p_w(j) * ch.h_d(k, j) * hb;
      c += p_w(j) * std::norm(ch.h_d(k, j));
    }
    dec.C(k) = c;
    dec.h_dd(k) = ch.h_d(k, k);
    dec.h_bb[k] = ch.h_b(k, k);
  }
  return dec;
}

double denominator(const SinrDecomposition& dec, int k, const CVec& a) {
  return (dec.L_b[k].adjoint() * a).squaredNorm() +
         dec.R_r_diag[k].dot(a.cwiseAbs2()) + 2.0 * std::real(dec.g[k].dot(a)) +
         dec.C(k);
}

RVec sinr_values(const SinrDecomposition& dec, const RVec& p_w, const CVec& a) {
  RVec s(dec.K);
  for (int k = 0; k < dec.K; ++k) {
    const double num = p_w(k) * std::norm(dec.h_dd(k) + dec.h_bb[k].dot(a));
    s(k) = num / denominator(dec, k, a);
  }
  return s;
}

RVec achievable_rates(const CVec& a, const ChannelRealization& ch, const RVec& p_w,
                      double sigma_r2, double sigma_s2, RateMode mode,
                      double alpha_max) {
  const double bound = (mode == RateMode::passive) ? 1.0 : alpha_max;
  if (a.cwiseAbs().maxCoeff() > bound * (1.0 + 2e-3) + 1e-12)
    throw std::invalid_argument("achievable_rates: amplitude exceeds the mode bound");
  const double sr2 = (mode == RateMode::passive) ? 0.0 : sigma_r2;
  const SinrDecomposition dec = sinr_decomposition(ch, p_w, sr2, sigma_s2);
  const RVec s = sinr_values(dec, p_w, a);
  return s.unaryExpr([](double v) { return std::log2(1.0 + v); });
}

RVec ep_diag(const CMat& H_t, const RVec& p_w, double sigma_r2) {
  return (H_t.cwiseAbs2() * p_w).array() + sigma_r2;
}

RVec ea_diag(const RVec& beta, const RVec& ep, const PowerModel& pm) {
  return (pm.p_bias_w + pm.p_dc_w) * beta + pm.xi * ep;
}

double power_consumption(const CVec& a, const CMat& H_t, const RVec& p_w,
                         double sigma_r2, const PowerModel& pm) {
  const int Q = static_cast<int>(a.size());
  if (pm.kind == PowerModelKind::Passive) return Q * pm.p_dc_w;
  const RVec ep = ep_diag(H_t, p_w, sigma_r2);
  const double opd = pm.xi * ep.dot(a.cwiseAbs2());
  if (pm.kind == PowerModelKind::ActiveOriginal)
    return Q * (pm.p_bias_w + pm.p_dc_w) + opd;
  int nnz = 0;
  for (int q = 0; q < Q; ++q)
    if (std::abs(a(q)) > 0.0) ++nnz;
  return nnz * (pm.p_bias_w + pm.p_dc_w) + opd;
}

}  // namespace risbf
