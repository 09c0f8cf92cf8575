#include "risbf/powermin.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "risbf/nulling.hpp"
#include "risbf/sumrate.hpp"

namespace risbf {

double gamma_from_rate(double rate_req_bps_hz) {
  return std::exp2(rate_req_bps_hz) - 1.0;
}

namespace {

RVec lift_diag(const RVec& top, double last) {
  RVec d(top.size() + 1);
  d.head(top.size()) = top;
  d(top.size()) = last;
  return d;
}

RVec rate_req_vec(const ScenarioConfig& cfg) {
  if (cfg.rate_req_bps_hz.size() == cfg.K) return cfg.rate_req_bps_hz;
  if (cfg.rate_req_bps_hz.size() == 1)
    return RVec::Constant(cfg.K, cfg.rate_req_bps_hz(0));
  throw std::invalid_argument("rate_req_bps_hz: size must be K or 1");
}

}  // namespace

SdrInstance build_sdr_instance(const SinrDecomposition& dec, const RVec& p_w,
                               const RVec& ea, const RVec& rate_req,
                               double alpha_max) {
  SdrInstance inst;
  inst.Q = dec.Q;
  inst.K = dec.K;
  inst.alpha_max_sq = alpha_max * alpha_max;
  inst.ea_bar = lift_diag(ea, 0.0);
  inst.gamma = rate_req.unaryExpr([](double r) { return gamma_from_rate(r); });
  inst.R_num.resize(dec.K);
  inst.R_den.resize(dec.K);
  for (int k = 0; k < dec.K; ++k) {
    SdpMatrix& num = inst.R_num[k];
    num.W = CMat::Zero(inst.Q + 1, 1);
    num.W.col(0).head(inst.Q) = dec.h_bb[k];
    num.W.col(0)(inst.Q) = std::conj(dec.h_dd(k));
    num.ws = RVec::Constant(1, p_w(k));

    // [[R_r + R_b, g], [g^H, C]]: diagonal block, interference factor columns,
    // and the off-diagonal cross term as a signed pair of lifted columns
    SdpMatrix& den = inst.R_den[k];
    den.dg = lift_diag(dec.R_r_diag[k], dec.C(k));
    const int nb = static_cast<int>(dec.L_b[k].cols());
    const double gn = dec.g[k].norm();
    const int nc = nb + (gn > 0 ? 2 : 0);
    den.W = CMat::Zero(inst.Q + 1, nc);
    den.ws = RVec::Zero(nc);
    for (int c = 0; c < nb; ++c) {
      den.W.col(c).head(inst.Q) = dec.L_b[k].col(c);
      den.ws(c) = 1.0;
    }
    if (gn > 0) {
      const double s = std::sqrt(gn);
      den.W.col(nb).head(inst.Q) = dec.g[k] / s;
      den.W.col(nb)(inst.Q) = s;
      den.W.col(nb + 1).head(inst.Q) = dec.g[k] / s;
      den.W.col(nb + 1)(inst.Q) = -s;
      den.ws(nb) = 0.5;
      den.ws(nb + 1) = -0.5;
    }
  }
  return inst;
}

SemidefiniteProgram sdr_program(const SdrInstance& inst, const SdpMatrix& objective) {
  SemidefiniteProgram p;
  const int n = inst.Q + 1;
  p.n = n;
  p.C = objective;
  for (int k = 0; k < inst.K; ++k) {
    SdpConstraint c;
    const double gam = inst.gamma(k);
    const SdpMatrix& num = inst.R_num[k];
    const SdpMatrix& den = inst.R_den[k];
    if (gam > 0) {
      c.G.dg = -gam * den.dg;
      const int nw = 1 + static_cast<int>(den.W.cols());
      c.G.W = CMat::Zero(n, nw);
      c.G.ws = RVec::Zero(nw);
      c.G.W.col(0) = num.W.col(0);
      c.G.ws(0) = num.ws(0);
      if (den.W.cols()) {
        c.G.W.rightCols(den.W.cols()) = den.W;
        c.G.ws.tail(den.W.cols()) = -gam * den.ws;
      }
    } else {
      c.G = num;
    }
    c.rhs = 0.0;
    c.sense = ConSense::ge;
    p.cons.push_back(std::move(c));
  }
  for (int q = 0; q < inst.Q; ++q) {
    SdpConstraint c;
    c.G.dg = RVec::Zero(n);
    c.G.dg(q) = 1.0;
    c.rhs = inst.alpha_max_sq;
    c.sense = ConSense::le;
    p.cons.push_back(std::move(c));
  }
  SdpConstraint unit;
  unit.G.dg = RVec::Zero(n);
  unit.G.dg(n - 1) = 1.0;
  unit.rhs = 1.0;
  unit.sense = ConSense::eq;
  p.cons.push_back(std::move(unit));
  return p;
}

SdpResult solve_sdr(const SdrInstance& inst, double tol, bool skip_phase1) {
  SdpMatrix obj;
  obj.dg = inst.ea_bar;
  return solve_sdp(sdr_program(inst, obj), tol, skip_phase1);
}

namespace {

struct EigTop {
  double lambda1 = 0;
  double lambda2 = 0;
  CVec u1;
  double trace = 0;
};

EigTop top_eig(const CMat& A) {
  Eigen::SelfAdjointEigenSolver<CMat> es(A);
  EigTop e;
  const int n = static_cast<int>(A.rows());
  e.lambda1 = es.eigenvalues()(n - 1);
  e.lambda2 = n > 1 ? es.eigenvalues()(n - 2) : 0.0;
  e.u1 = es.eigenvectors().col(n - 1);
  e.trace = es.eigenvalues().sum();
  return e;
}

DcaState state_of(const CMat& A, const EigTop& e, const RVec& ea_bar, double rho) {
  DcaState s;
  s.trace_a = e.trace;
  s.lambda1 = e.lambda1;
  s.penalty = e.trace - e.lambda1;
  s.penalized = ea_bar.dot(A.diagonal().real()) + rho * s.penalty;
  return s;
}

}  // namespace

DcaResult dca_rank_one(const CMat& A_star, const SdrInstance& inst, double rho,
                       double tol, int max_iters, double sdp_tol) {
  DcaResult res;
  const int n = inst.Q + 1;
  CMat A = 0.5 * (A_star + A_star.adjoint());
  EigTop e = top_eig(A);
  DcaState cur = state_of(A, e, inst.ea_bar, rho);
  res.trace.push_back(cur);
  res.A = A;
  if (cur.penalty <= tol * std::max(cur.trace_a, 1e-300)) {
    res.status = SolveStatus::optimal;
    return res;
  }

  for (int t = 0; t < max_iters; ++t) {
    SdpMatrix obj;
    obj.dg = inst.ea_bar + RVec::Constant(n, rho);
    obj.W = CMat(n, 1);
    obj.W.col(0) = e.u1;
    obj.ws = RVec::Constant(1, -rho);
    const SdpResult sub = solve_sdp(sdr_program(inst, obj), sdp_tol, true);
    if (sub.status != SolveStatus::optimal && sub.status != SolveStatus::max_iters) {
      res.detail = "subproblem stopped: " + std::string(to_string(sub.status));
      break;
    }
    const CMat Ac = 0.5 * (sub.A + sub.A.adjoint());
    const EigTop ec = top_eig(Ac);
    const DcaState cand = state_of(Ac, ec, inst.ea_bar, rho);
    if (!(cand.penalized <= cur.penalized)) {
      res.detail = "no further descent at solver precision";
      break;
    }
    A = Ac;
    e = ec;
    cur = cand;
    res.trace.push_back(cur);
    res.A = A;
    ++res.iters;
    if (cur.penalty <= tol * std::max(cur.trace_a, 1e-300)) {
      res.status = SolveStatus::optimal;
      return res;
    }
  }
  res.status = SolveStatus::max_iters;
  if (res.detail.empty()) res.detail = "penalty above threshold after max iterations";
  return res;
}

ExtractResult extract_reflect_vector(const CMat& A) {
  ExtractResult res;
  const int n = static_cast<int>(A.rows());
  const EigTop e = top_eig(0.5 * (A + A.adjoint()));
  if (!(e.lambda1 > 0)) return res;
  const CVec abar = std::sqrt(e.lambda1) * e.u1;
  if (std::abs(abar(n - 1)) < 1e-6) return res;
  res.a = abar.head(n - 1) / abar(n - 1);
  res.status = SolveStatus::optimal;
  return res;
}

namespace {

struct RankOneRun {
  bool ok = false;        // extraction produced a vector
  bool converged = false; // penalty dropped below threshold
  CVec a;
  int dca_iters = 0;
};

// refinement plus extraction, with one retry from a blended (still feasible)
// start when the auxiliary entry degenerates
RankOneRun run_rank_one(const CMat& A_star, const SdrInstance& inst,
                        const Tolerances& tol) {
  RankOneRun run;
  DcaResult dca = dca_rank_one(A_star, inst, tol.dca_rho, tol.dca_penalty_tol,
                               tol.dca_max_iters, tol.gap_tol);
  run.dca_iters = dca.iters;
  ExtractResult ext = extract_reflect_vector(dca.A);
  if (ext.status != SolveStatus::optimal) {
    const CMat blended = 0.5 * (A_star + dca.A);
    dca = dca_rank_one(blended, inst, tol.dca_rho, tol.dca_penalty_tol,
                       tol.dca_max_iters, tol.gap_tol);
    run.dca_iters += dca.iters;
    ext = extract_reflect_vector(dca.A);
    if (ext.status != SolveStatus::optimal) return run;
  }
  run.ok = true;
  run.converged = dca.status == SolveStatus::optimal;
  run.a = ext.a;
  return run;
}

RVec rates_of(const SinrDecomposition& dec, const RVec& p_w, const CVec& a) {
  return sinr_values(dec, p_w, a).unaryExpr([](double v) { return std::log2(1.0 + v); });
}

int nnz_count(const CVec& a) {
  int n = 0;
  for (int q = 0; q < a.size(); ++q)
    if (std::abs(a(q)) > 0.0) ++n;
  return n;
}

}  // namespace

SolveReport powermin_sparse(const ChannelRealization& ch, const ScenarioConfig& cfg) {
  SolveReport rep;
  const LinearUnits lin = linear_units(cfg);
  const RVec rreq = rate_req_vec(cfg);
  const SinrDecomposition dec =
      sinr_decomposition(ch, lin.p_w, lin.sigma_r2, lin.sigma_s2);
  const RVec ep = ep_diag(ch.H_t, lin.p_w, lin.sigma_r2);
  const PowerModel pm{PowerModelKind::ActiveSparse, lin.p_bias_w, lin.p_dc_w, lin.xi};

  const MinInterferenceResult init = min_interference_qcqp(ch, lin.p_w, lin.alpha_max);
  CVec a = init.status == SolveStatus::optimal ? init.a : CVec::Zero(ch.Q);

  double prev_power = -1.0;
  bool settled = false;
  bool last_converged = false;
  for (int outer = 0; outer < cfg.tol.powermin_max_outer; ++outer) {
    const RVec beta = update_weights(a, cfg.tol.tau_reweight);
    const RVec ea = ea_diag(beta, ep, pm);
    const SdrInstance inst = build_sdr_instance(dec, lin.p_w, ea, rreq, lin.alpha_max);
    const SdpResult sdr = solve_sdr(inst, cfg.tol.gap_tol, outer > 0);
    if (sdr.status == SolveStatus::infeasible) {
      rep.status = SolveStatus::infeasible;
      rep.feasible = false;
      rep.detail = "rate requirements unreachable on this realization";
      return rep;
    }
    if (sdr.status != SolveStatus::optimal && sdr.status != SolveStatus::max_iters) {
      rep.status = SolveStatus::numerical_failure;
      rep.feasible = false;
      rep.detail = "relaxation solve failed";
      return rep;
    }
    const RankOneRun run = run_rank_one(sdr.A, inst, cfg.tol);
    rep.inner_iters += run.dca_iters;
    if (!run.ok) {
      rep.status = SolveStatus::numerical_failure;
      rep.feasible = false;
      rep.detail = "rank-one extraction degenerate";
      return rep;
    }
    a = run.a;
    last_converged = run.converged;
    const CVec z = zero_setting(a, cfg.tol.zero_set_amp_threshold);
    const double power = power_consumption(z, ch.H_t, lin.p_w, lin.sigma_r2, pm);
    rep.trajectory.push_back(power);
    rep.iterations = outer + 1;
    if (prev_power >= 0.0 &&
        std::abs(power - prev_power) <=
            cfg.tol.powermin_rel_tol * std::max(prev_power, 1e-12)) {
      settled = true;
      break;
    }
    prev_power = power;
  }

  const CVec z = zero_setting(a, cfg.tol.zero_set_amp_threshold);
  rep.a = z;
  rep.power_w = power_consumption(z, ch.H_t, lin.p_w, lin.sigma_r2, pm);
  rep.objective = rep.power_w;
  rep.active_res = nnz_count(z);
  rep.rates = rates_of(dec, lin.p_w, z);
  rep.feasible = true;
  rep.status = settled && last_converged ? SolveStatus::optimal : SolveStatus::max_iters;
  if (!settled) rep.detail = "outer loop exhausted before the power settled";
  return rep;
}

SolveReport powermin_baseline(const ChannelRealization& ch, const ScenarioConfig& cfg,
                              PowerminBaseline kind) {
  SolveReport rep;
  const LinearUnits lin = linear_units(cfg);
  const RVec rreq = rate_req_vec(cfg);

  if (kind == PowerminBaseline::fully_active) {
    const SinrDecomposition dec =
        sinr_decomposition(ch, lin.p_w, lin.sigma_r2, lin.sigma_s2);
    const RVec ep = ep_diag(ch.H_t, lin.p_w, lin.sigma_r2);
    const PowerModel pm{PowerModelKind::ActiveOriginal, lin.p_bias_w, lin.p_dc_w,
                        lin.xi};
    const RVec ea = lin.xi * ep;  // bias/DC power is a constant, not optimized
    const SdrInstance inst = build_sdr_instance(dec, lin.p_w, ea, rreq, lin.alpha_max);
    const SdpResult sdr = solve_sdr(inst, cfg.tol.gap_tol, false);
    if (sdr.status == SolveStatus::infeasible) {
      rep.status = SolveStatus::infeasible;
      rep.feasible = false;
      rep.detail = "rate requirements unreachable on this realization";
      return rep;
    }
    if (sdr.status != SolveStatus::optimal && sdr.status != SolveStatus::max_iters) {
      rep.status = SolveStatus::numerical_failure;
      rep.feasible = false;
      rep.detail = "relaxation solve failed";
      return rep;
    }
    const RankOneRun run = run_rank_one(sdr.A, inst, cfg.tol);
    rep.inner_iters = run.dca_iters;
    if (!run.ok) {
      rep.status = SolveStatus::numerical_failure;
      rep.feasible = false;
      rep.detail = "rank-one extraction degenerate";
      return rep;
    }
    rep.a = run.a;
    rep.power_w = power_consumption(run.a, ch.H_t, lin.p_w, lin.sigma_r2, pm);
    rep.objective = rep.power_w;
    rep.active_res = ch.Q;
    rep.rates = rates_of(dec, lin.p_w, run.a);
    rep.iterations = 1;
    rep.feasible = true;
    rep.status = run.converged ? SolveStatus::optimal : SolveStatus::max_iters;
    return rep;
  }

  // passive feasibility: unit modulus bound, no amplification noise, and a
  // penalty-only objective; feasible iff a rank-one point satisfying the rate
  // constraints emerges
  const SinrDecomposition dec = sinr_decomposition(ch, lin.p_w, 0.0, lin.sigma_s2);
  const SdrInstance inst =
      build_sdr_instance(dec, lin.p_w, RVec::Zero(ch.Q), rreq, 1.0);
  SdpMatrix trace_obj;
  trace_obj.dg = RVec::Constant(ch.Q + 1, cfg.tol.dca_rho);
  const SdpResult sdr = solve_sdp(sdr_program(inst, trace_obj), cfg.tol.gap_tol, false);
  if (sdr.status == SolveStatus::infeasible) {
    rep.status = SolveStatus::infeasible;
    rep.feasible = false;
    rep.detail = "rate requirements unreachable with unit-modulus reflection";
    return rep;
  }
  if (sdr.status != SolveStatus::optimal && sdr.status != SolveStatus::max_iters) {
    rep.status = SolveStatus::numerical_failure;
    rep.feasible = false;
    rep.detail = "relaxation solve failed";
    return rep;
  }
  const RankOneRun run = run_rank_one(sdr.A, inst, cfg.tol);
  rep.inner_iters = run.dca_iters;
  rep.iterations = 1;
  bool ok = run.ok && run.converged;
  RVec rates;
  if (ok) {
    rates = rates_of(dec, lin.p_w, run.a);
    ok = (rates - rreq).minCoeff() >= -1e-4 &&
         run.a.cwiseAbs().maxCoeff() <= 1.0 + 1e-3;
  }
  if (!ok) {
    rep.status = SolveStatus::optimal;
    rep.feasible = false;
    rep.detail = "no rank-one point satisfying the rate targets emerged";
    return rep;
  }
  rep.a = run.a;
  rep.power_w = ch.Q * lin.p_dc_w;
  rep.objective = rep.power_w;
  rep.active_res = ch.Q;
  rep.rates = rates;
  rep.feasible = true;
  rep.status = SolveStatus::optimal;
  return rep;
}

}  // namespace risbf
