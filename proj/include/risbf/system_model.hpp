#pragma once

#include "risbf/scenario.hpp"
#include "risbf/types.hpp"

namespace risbf {

// Per-user quadratic decomposition of the SINR denominator:
//   den_k(a) = a^H (R_r_k + R_b_k) a + 2 Re(g_k^H a) + C_k
// with R_r_k = sigma_r2 * diag(|H_r[:,k]|^2), R_b_k = L_b_k L_b_k^H,
// L_b_k columns sqrt(p_j) h_b(k,j) for j != k, g_k = sum_{j!=k} p_j h_d(k,j) h_b(k,j),
// C_k = sum_{j!=k} p_j |h_d(k,j)|^2 + sigma_s2.
struct SinrDecomposition {
  int K = 0, Q = 0;
  double sigma_r2 = 0, sigma_s2 = 0;
  std::vector<RVec> R_r_diag;  // Q
  std::vector<CMat> L_b;       // Q x (K-1)
  std::vector<CVec> g;         // Q
  RVec C;                      // K
  CVec h_dd;                   // desired direct links h_d(k,k)
  std::vector<CVec> h_bb;      // desired cascaded vectors h_b(k,k)

  CMat R_b(int k) const { return L_b[k] * L_b[k].adjoint(); }
};

SinrDecomposition sinr_decomposition(const ChannelRealization& ch, const RVec& p_w,
                                     double sigma_r2, double sigma_s2);

double denominator(const SinrDecomposition& dec, int k, const CVec& a);

// Per-user SINR p_k |h_d(k,k) + h_b(k,k)^H a|^2 / den_k(a).
RVec sinr_values(const SinrDecomposition& dec, const RVec& p_w, const CVec& a);

enum class RateMode { active, passive };

// log2(1 + SINR_k); passive mode evaluates with sigma_r2 = 0 and bound 1.
// Throws std::invalid_argument when |a_q| exceeds the mode's amplitude bound.
RVec achievable_rates(const CVec& a, const ChannelRealization& ch, const RVec& p_w,
                      double sigma_r2, double sigma_s2, RateMode mode,
                      double alpha_max);

// Diagonal of E_p: [H_t diag(p) H_t^H]_qq + sigma_r2.
RVec ep_diag(const CMat& H_t, const RVec& p_w, double sigma_r2);

// Diagonal of E_a: (P_bias + P_DC) beta_q + xi * [E_p]_qq.
RVec ea_diag(const RVec& beta, const RVec& ep, const PowerModel& pm);

// ActiveSparse: ||a||_0 (P_bias + P_DC) + xi a^H E_p a;
// ActiveOriginal: Q (P_bias + P_DC) + xi a^H E_p a;  Passive: Q * P_DC.
double power_consumption(const CVec& a, const CMat& H_t, const RVec& p_w,
                         double sigma_r2, const PowerModel& pm);

}  // namespace risbf
