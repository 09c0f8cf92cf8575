#pragma once

#include "risbf/types.hpp"

namespace risbf {

// Concave quadratic form over a complex vector:
//   value(a) = c0 + 2 Re(l^H a) - sum_q d_q |a_q|^2 - ||F^H a||^2,  d >= 0.
// Every quadratic in this project is diagonal plus a thin factor, which the
// QCQP solver exploits (block-diagonal Newton system with a low-rank correction).
struct QuadForm {
  double c0 = 0.0;
  CVec l;   // may be size 0
  RVec d;   // may be size 0
  CMat F;   // may be 0 columns

  double value(const CVec& a) const;
};

// maximize  sum_k ln(logs[k](a)) + quad(a)
// s.t.      cons[i](a) >= 0,  |a_q| <= u_q.
// x0 must be strictly feasible (and strictly inside the log domains).
struct ConvexQuadraticProgram {
  int Q = 0;
  std::vector<QuadForm> logs;
  QuadForm quad;
  bool has_quad = false;
  std::vector<QuadForm> cons;
  RVec u;
  CVec x0;
};

struct QcqpResult {
  SolveStatus status = SolveStatus::numerical_failure;
  CVec a;
  double objective = 0.0;  // natural-log units for the log terms
  int newton_steps = 0;
  double gap = 0.0;        // barrier suboptimality bound, objective units
};

// Log-barrier path following with damped Newton. tol is a relative duality-gap
// target (scaled by an internal estimate of the objective magnitude).
QcqpResult solve_qcqp(const ConvexQuadraticProgram& p, double tol);

// Hermitian data matrix stored as diagonal plus signed thin factor:
//   mat = diag(dg) + sum_c ws_c W[:,c] W[:,c]^H,
//   dot(A) = dg . real(diag(A)) + sum_c ws_c W[:,c]^H A W[:,c].
struct SdpMatrix {
  RVec dg;   // may be size 0
  CMat W;    // may be 0 columns
  RVec ws;

  double dot(const CMat& A) const;
  void add_to(CMat& S, double scale, int n) const;
  CMat dense(int n) const;
  double fro_norm(int n) const;
};

enum class ConSense { ge, le, eq };

struct SdpConstraint {
  SdpMatrix G;
  double rhs = 0.0;
  ConSense sense = ConSense::ge;
};

// minimize C . A  s.t. constraints, A Hermitian PSD (n x n).
struct SemidefiniteProgram {
  int n = 0;
  SdpMatrix C;
  std::vector<SdpConstraint> cons;
};

struct SdpResult {
  SolveStatus status = SolveStatus::numerical_failure;
  CMat A;
  double objective = 0.0;
  int iters = 0;
  double gap = 0.0;
};

// Dual barrier interior-point method with primal recovery A = mu * S^{-1}.
// A phase-I solve certifies (in)feasibility first; skip_phase1 skips it when
// the caller already knows the constraint set is feasible (e.g. repeated
// solves over the same feasible set with different objectives).
SdpResult solve_sdp(const SemidefiniteProgram& p, double tol, bool skip_phase1 = false);

}  // namespace risbf
