#pragma once

#include <vector>

#include "risbf/conic.hpp"
#include "risbf/scenario.hpp"
#include "risbf/system_model.hpp"

namespace risbf {

// SINR threshold equivalent to a spectral-efficiency target: 2^r - 1.
double gamma_from_rate(double rate_req_bps_hz);

// Lifted data for the rank-relaxed power minimization over A ~ [a; 1][a; 1]^H.
// Numerator matrices R_num[k] = p_k u_k u_k^H, u_k = [h_b(k,k); conj(h_d(k,k))];
// denominator matrices R_den[k] = [[R_r_k + R_b_k, g_k], [g_k^H, C_k]], so that
// for rank-one A the ratio of traces is exactly the SINR of a.
struct SdrInstance {
  int Q = 0, K = 0;
  std::vector<SdpMatrix> R_num;
  std::vector<SdpMatrix> R_den;
  RVec gamma;    // per-user SINR thresholds
  RVec ea_bar;   // diagonal power objective, last entry 0
  double alpha_max_sq = 1.0;
};

// ea is the Q-entry E_a diagonal (zero for a pure feasibility search).
SdrInstance build_sdr_instance(const SinrDecomposition& dec, const RVec& p_w,
                               const RVec& ea, const RVec& rate_req,
                               double alpha_max);

// Feasible set of the relaxation: per-user SINR constraints, per-element
// modulus boxes, unit auxiliary entry, A PSD. The objective is a parameter so
// the rank-one refinement can swap it between iterations.
SemidefiniteProgram sdr_program(const SdrInstance& inst, const SdpMatrix& objective);

// minimize Tr(diag(ea_bar) A) over the feasible set. status == infeasible
// certifies that the rate requirements are unreachable on this realization.
SdpResult solve_sdr(const SdrInstance& inst, double tol, bool skip_phase1 = false);

struct DcaState {
  double trace_a = 0;
  double lambda1 = 0;
  double penalty = 0;    // trace_a - lambda1, >= 0 for PSD iterates
  double penalized = 0;  // Tr(diag(ea_bar) A) + rho * penalty
};

struct DcaResult {
  SolveStatus status = SolveStatus::numerical_failure;
  CMat A;
  std::vector<DcaState> trace;
  int iters = 0;
  std::string detail;
};

// Penalty difference-of-convex refinement toward rank one: repeatedly
// minimizes Tr(diag(ea_bar) A) + rho (Tr(A) - Re<u1 u1^H, A>) over the
// feasible set, u1 the leading eigenvector of the previous accepted iterate.
// Candidates that fail to decrease the true penalized objective are rejected
// and the loop stops. Converged when Tr(A) - ||A||_2 <= tol * Tr(A).
DcaResult dca_rank_one(const CMat& A_star, const SdrInstance& inst, double rho,
                       double tol, int max_iters, double sdp_tol = 1e-7);

struct ExtractResult {
  SolveStatus status = SolveStatus::numerical_failure;
  CVec a;
};

// a_bar = sqrt(lambda1) u1; a = a_bar[0..Q-1] / a_bar[Q]. Fails when the
// auxiliary entry is degenerate (|a_bar[Q]| < 1e-6).
ExtractResult extract_reflect_vector(const CMat& A);

// Reweighted-l1 outer loop: init from min_interference_qcqp, then
// {weights, relaxation, rank-one refinement, extraction} until the power of
// consecutive switched-off solutions settles. Reported power and RE count
// refer to the zero-set solution under the sparse model.
SolveReport powermin_sparse(const ChannelRealization& ch, const ScenarioConfig& cfg);

enum class PowerminBaseline { fully_active, passive_feasibility };

// fully_active: one relaxation + refinement pass with the beta term dropped
// from the variable objective; the bias/DC power enters as the constant
// Q (P_bias + P_DC). passive_feasibility: unit modulus bound, no
// amplification noise, penalty-only objective; feasible iff a rank-one,
// constraint-satisfying point emerges, power Q * P_DC.
SolveReport powermin_baseline(const ChannelRealization& ch, const ScenarioConfig& cfg,
                              PowerminBaseline kind);

}  // namespace risbf
