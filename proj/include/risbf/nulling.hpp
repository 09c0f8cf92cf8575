#pragma once

#include "risbf/conic.hpp"
#include "risbf/scenario.hpp"

namespace risbf {

// Minimum-norm exact nulling: the a with H_b_stack^H a = -h_d_stack of least
// Euclidean norm. Requires Q >= K(K-1) and a numerically full-rank stack.
CVec nulling_closed_form(const ChannelRealization& ch, double rank_tol = 1e-10);

struct MinInterferenceResult {
  SolveStatus status = SolveStatus::numerical_failure;
  CVec a;
  double residual_power = 0.0;  // || P^{1/2} (H_b^H a + h_d) ||^2 at the optimum
};

// minimize || P^{1/2} (H_b_stack^H a + h_d_stack) ||^2  s.t.  |a_q| <= alpha_max,
// where P carries the transmit power p_j of the interfering column (k, j).
MinInterferenceResult min_interference_qcqp(const ChannelRealization& ch,
                                            const RVec& p_w, double alpha_max,
                                            double tol = 1e-9);

struct NullingTrialRecord {
  int q = 0;
  double alpha_max_sq_db = 0.0;
  int trial = 0;
  double residual_power = 0.0;
  bool success = false;
};

struct NullingCell {
  int q = 0;
  double alpha_max_sq_db = 0.0;
  double success_prob = 0.0;
  int trials = 0;
};

struct NullingTable {
  std::vector<NullingTrialRecord> records;  // sorted by (q, alpha, trial)
  std::vector<NullingCell> cells;
};

// Monte Carlo success probability of nulling below 0.001 * sigma_s^2. One
// i.i.d. Rayleigh draw per trial at max(q_list) elements, restricted per q, so
// success is comparable across q at matched randomness.
NullingTable nulling_success_probability(const std::vector<int>& q_list,
                                         const std::vector<double>& alpha_max_sq_db_list,
                                         int trials, std::uint64_t seed, int K = 4,
                                         double gain_ratio_db = 20.0,
                                         double p_over_sigma_db = 10.0);

}  // namespace risbf
