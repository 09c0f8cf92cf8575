#pragma once

#include "risbf/nulling.hpp"
#include "risbf/system_model.hpp"

namespace risbf {

// omega_k = sqrt(p_k) (h_d(k,k) + h_b(k,k)^H a) / den_k(a)
CVec update_omega(const CVec& a, const SinrDecomposition& dec, const RVec& p_w);

// beta_q = 1 / (|a_q|^2 + tau)
RVec update_weights(const CVec& a, double tau);

// sum_k log2 t_k(a) with
// t_k = 1 + 2 sqrt(p_k) Re(conj(omega_k)(h_d(k,k) + h_b(k,k)^H a)) - |omega_k|^2 den_k(a).
// At omega = update_omega(a) this equals the sum rate exactly.
double surrogate_value(const CVec& a, const CVec& omega, const SinrDecomposition& dec,
                       const RVec& p_w);

struct FpSubproblemResult {
  SolveStatus status = SolveStatus::numerical_failure;
  CVec a;
  int newton_steps = 0;
};

// maximize the surrogate over { |a_q| <= alpha_max, a^H diag(ea) a <= budget_w };
// budget_w < 0 disables the power constraint. warm must be feasible; the result
// is never worse than warm in surrogate value.
FpSubproblemResult fp_subproblem(const CVec& omega, const RVec& ea,
                                 const SinrDecomposition& dec, const RVec& p_w,
                                 double alpha_max, double budget_w, const CVec& warm,
                                 double tol = 1e-8);

CVec zero_setting(const CVec& a, double threshold);

// largest c in (0,1] with (c a)^H diag(ea) (c a) <= budget_w, applied to a
CVec scale_into_budget(const CVec& a, const RVec& ea, double budget_w);

// interference-nulling warm start scaled into the power budget (weights taken
// at the unscaled vector)
CVec sumrate_init(const ChannelRealization& ch, const ScenarioConfig& cfg);

SolveReport sumrate_one_loop(const ChannelRealization& ch, const ScenarioConfig& cfg,
                             const CVec& init);
SolveReport sumrate_two_loop(const ChannelRealization& ch, const ScenarioConfig& cfg,
                             const CVec& init);

enum class SumrateBaseline { fixed_active, passive_upper };

// fixed_active: first Q_F REs at the always-on power model, rest pinned to 0.
// passive_upper: |a_q| <= 1, no budget, sigma_r2 = 0 (run it on a realization
// with passive_upper_count REs).
SolveReport sumrate_baseline(const ChannelRealization& ch, const ScenarioConfig& cfg,
                             SumrateBaseline kind);

int fixed_active_count(const ScenarioConfig& cfg);   // min(floor(P_RIS/(P_bias+P_DC)), Q)
int passive_upper_count(const ScenarioConfig& cfg);  // floor(P_RIS/P_DC)

}  // namespace risbf
