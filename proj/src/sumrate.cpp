#include "risbf/sumrate.hpp"

#include <cmath>

namespace risbf {

CVec update_omega(const CVec& a, const SinrDecomposition& dec, const RVec& p_w) {
  CVec w(dec.K);
  for (int k = 0; k < dec.K; ++k) {
    const cplx num = std::sqrt(p_w(k)) * (dec.h_dd(k) + dec.h_bb[k].dot(a));
    w(k) = num / denominator(dec, k, a);
  }
  return w;
}

RVec update_weights(const CVec& a, double tau) {
  return (a.cwiseAbs2().array() + tau).inverse();
}

double surrogate_value(const CVec& a, const CVec& omega, const SinrDecomposition& dec,
                       const RVec& p_w) {
  double v = 0;
  for (int k = 0; k < dec.K; ++k) {
    const cplx s = dec.h_dd(k) + dec.h_bb[k].dot(a);
    const double t = 1.0 + 2.0 * std::sqrt(p_w(k)) * std::real(std::conj(omega(k)) * s) -
                     std::norm(omega(k)) * denominator(dec, k, a);
    v += std::log2(t);
  }
  return v;
}

namespace {

QuadForm t_form(int k, const CVec& omega, const SinrDecomposition& dec, const RVec& p_w) {
  const cplx w = omega(k);
  const double w2 = std::norm(w);
  QuadForm f;
  f.c0 = 1.0 + 2.0 * std::sqrt(p_w(k)) * std::real(std::conj(w) * dec.h_dd(k)) -
         w2 * dec.C(k);
  f.l = std::sqrt(p_w(k)) * w * dec.h_bb[k] - w2 * dec.g[k];
  f.d = w2 * dec.R_r_diag[k];
  if (dec.L_b[k].cols() > 0) f.F = std::abs(w) * dec.L_b[k];
  return f;
}

}  // namespace

FpSubproblemResult fp_subproblem(const CVec& omega, const RVec& ea,
                                 const SinrDecomposition& dec, const RVec& p_w,
                                 double alpha_max, double budget_w, const CVec& warm,
                                 double tol) {
  FpSubproblemResult out;
  if (budget_w == 0.0) {
    out.status = SolveStatus::optimal;
    out.a = CVec::Zero(dec.Q);
    return out;
  }

  ConvexQuadraticProgram p;
  p.Q = dec.Q;
  for (int k = 0; k < dec.K; ++k) p.logs.push_back(t_form(k, omega, dec, p_w));
  if (budget_w > 0) {
    QuadForm b;
    b.c0 = budget_w;
    b.d = ea;
    p.cons.push_back(b);
  }
  p.u = RVec::Constant(dec.Q, alpha_max);
  p.x0 = (1.0 - 1e-7) * warm;
  if (budget_w > 0) p.x0 = scale_into_budget(p.x0, ea, budget_w * (1.0 - 1e-9));

  const QcqpResult r = solve_qcqp(p, tol);
  out.newton_steps = r.newton_steps;
  out.status = SolveStatus::optimal;
  const double s_warm = surrogate_value(warm, omega, dec, p_w);
  if (r.status == SolveStatus::optimal || r.status == SolveStatus::max_iters) {
    const double s_new = surrogate_value(r.a, omega, dec, p_w);
    if (std::isfinite(s_new) && s_new >= s_warm) {
      out.a = r.a;
      return out;
    }
  }
  out.a = warm;
  return out;
}

CVec zero_setting(const CVec& a, double threshold) {
  CVec z = a;
  for (int q = 0; q < z.size(); ++q)
    if (std::abs(z(q)) < threshold) z(q) = cplx(0, 0);
  return z;
}

CVec scale_into_budget(const CVec& a, const RVec& ea, double budget_w) {
  if (budget_w < 0) return a;
  const double e = ea.dot(a.cwiseAbs2());
  if (e <= budget_w) return a;
  if (budget_w <= 0) return CVec::Zero(a.size());
  return std::sqrt(budget_w / e) * a;
}

CVec sumrate_init(const ChannelRealization& ch, const ScenarioConfig& cfg) {
  const LinearUnits u = linear_units(cfg);
  const MinInterferenceResult mi = min_interference_qcqp(ch, u.p_w, u.alpha_max);
  CVec a = mi.status == SolveStatus::optimal ? mi.a : CVec::Zero(ch.Q);
  const PowerModel pm{PowerModelKind::ActiveSparse, u.p_bias_w, u.p_dc_w, u.xi};
  const RVec ep = ep_diag(ch.H_t, u.p_w, u.sigma_r2);
  const RVec ea = ea_diag(update_weights(a, cfg.tol.tau_reweight), ep, pm);
  return scale_into_budget(a, ea, u.p_ris_w);
}

namespace {

struct FpEnv {
  const ChannelRealization* ch = nullptr;
  SinrDecomposition dec;
  RVec ep;
  RVec p_w;
  double sigma_r2 = 0, sigma_s2 = 0;
  double alpha_max = 1;
  double budget_w = -1;  // < 0: unconstrained power
  RateMode mode = RateMode::active;
  PowerModel report_pm;
  PowerModel budget_pm;
  bool reweight = false;
  RVec ea_fixed;
  Tolerances tol;
};

double env_rate(const FpEnv& e, const CVec& a) {
  return achievable_rates(a, *e.ch, e.p_w, e.sigma_r2, e.sigma_s2, e.mode, e.alpha_max)
      .sum();
}

// one {update_omega, fp_subproblem} pair; the true rate never decreases
int fp_pair(const FpEnv& e, const RVec& ea, CVec& a) {
  const CVec omega = update_omega(a, e.dec, e.p_w);
  const FpSubproblemResult sub =
      fp_subproblem(omega, ea, e.dec, e.p_w, e.alpha_max, e.budget_w, a, 1e-8);
  a = sub.a;
  return 1;
}

SolveReport run_fp(const FpEnv& e, CVec a, bool refresh_each_pair) {
  SolveReport rep;
  std::vector<double> traj{env_rate(e, a)};
  int consec = 0, pairs = 0, outer = 0;
  rep.status = SolveStatus::max_iters;

  while (outer < e.tol.fp_max_iters && pairs < e.tol.fp_max_iters) {
    ++outer;
    const RVec ea = e.reweight
                        ? ea_diag(update_weights(a, e.tol.tau_reweight), e.ep, e.budget_pm)
                        : e.ea_fixed;
    CVec a_in = a;
    if (refresh_each_pair) {
      pairs += fp_pair(e, ea, a_in);
    } else {
      double r_prev = env_rate(e, a_in);
      for (int it = 0; it < 50 && pairs < e.tol.fp_max_iters; ++it) {
        pairs += fp_pair(e, ea, a_in);
        const double r_cur = env_rate(e, a_in);
        const double rel = std::abs(r_cur - r_prev) / std::max(std::abs(r_prev), 1e-12);
        r_prev = r_cur;
        if (rel < e.tol.fp_rel_tol) break;
      }
    }
    double r_new = env_rate(e, a_in);
    if (r_new >= traj.back()) {
      a = a_in;
    } else {
      r_new = traj.back();  // reject the beta refresh
    }
    const double prev = traj.back();
    traj.push_back(r_new);
    const double rel = std::abs(r_new - prev) / std::max(std::abs(prev), 1e-12);
    consec = rel < e.tol.fp_rel_tol ? consec + 1 : 0;
    if (consec >= e.tol.fp_consecutive) {
      rep.status = SolveStatus::optimal;
      break;
    }
  }

  rep.iterations = outer;
  rep.inner_iters = pairs;
  rep.a = a;
  rep.rates = achievable_rates(a, *e.ch, e.p_w, e.sigma_r2, e.sigma_s2, e.mode,
                               e.alpha_max);
  rep.objective = rep.rates.sum();
  rep.power_w = power_consumption(a, e.ch->H_t, e.p_w, e.sigma_r2, e.report_pm);
  rep.active_res = 0;
  for (int q = 0; q < a.size(); ++q)
    if (std::abs(a(q)) > 0.0) ++rep.active_res;
  rep.trajectory = std::move(traj);
  return rep;
}

FpEnv make_env(const ChannelRealization& ch, const ScenarioConfig& cfg) {
  const LinearUnits u = linear_units(cfg);
  FpEnv e;
  e.ch = &ch;
  e.dec = sinr_decomposition(ch, u.p_w, u.sigma_r2, u.sigma_s2);
  e.ep = ep_diag(ch.H_t, u.p_w, u.sigma_r2);
  e.p_w = u.p_w;
  e.sigma_r2 = u.sigma_r2;
  e.sigma_s2 = u.sigma_s2;
  e.alpha_max = u.alpha_max;
  e.budget_w = u.p_ris_w;
  e.report_pm = {PowerModelKind::ActiveSparse, u.p_bias_w, u.p_dc_w, u.xi};
  e.budget_pm = e.report_pm;
  e.reweight = true;
  e.tol = cfg.tol;
  return e;
}

}  // namespace

SolveReport sumrate_one_loop(const ChannelRealization& ch, const ScenarioConfig& cfg,
                             const CVec& init) {
  return run_fp(make_env(ch, cfg), init, true);
}

SolveReport sumrate_two_loop(const ChannelRealization& ch, const ScenarioConfig& cfg,
                             const CVec& init) {
  return run_fp(make_env(ch, cfg), init, false);
}

int fixed_active_count(const ScenarioConfig& cfg) {
  const LinearUnits u = linear_units(cfg);
  const int qf = static_cast<int>(std::floor(u.p_ris_w / (u.p_bias_w + u.p_dc_w) + 1e-9));
  return std::min(qf, cfg.Q());
}

int passive_upper_count(const ScenarioConfig& cfg) {
  const LinearUnits u = linear_units(cfg);
  return static_cast<int>(std::floor(u.p_ris_w / u.p_dc_w + 1e-9));
}

SolveReport sumrate_baseline(const ChannelRealization& ch, const ScenarioConfig& cfg,
                             SumrateBaseline kind) {
  const LinearUnits u = linear_units(cfg);

  if (kind == SumrateBaseline::passive_upper) {
    // the budget limits how many passive elements can be powered at all
    const int qp = std::min(passive_upper_count(cfg), ch.Q);
    if (qp < 1) {
      SolveReport rep;
      rep.status = SolveStatus::infeasible;
      rep.feasible = false;
      rep.a = CVec::Zero(ch.Q);
      rep.detail = "budget below the on-power of a single RE";
      return rep;
    }
    const ChannelRealization sub = slice_res(ch, qp);
    FpEnv e;
    e.ch = &sub;
    e.dec = sinr_decomposition(sub, u.p_w, 0.0, u.sigma_s2);
    e.ep = ep_diag(sub.H_t, u.p_w, 0.0);
    e.p_w = u.p_w;
    e.sigma_r2 = 0.0;
    e.sigma_s2 = u.sigma_s2;
    e.alpha_max = 1.0;
    e.budget_w = -1.0;
    e.mode = RateMode::passive;
    e.report_pm = {PowerModelKind::Passive, u.p_bias_w, u.p_dc_w, u.xi};
    e.tol = cfg.tol;
    const MinInterferenceResult mi = min_interference_qcqp(sub, u.p_w, 1.0);
    const CVec init = mi.status == SolveStatus::optimal ? mi.a : CVec::Zero(qp);
    SolveReport rep = run_fp(e, init, false);
    CVec full = CVec::Zero(ch.Q);
    full.head(qp) = rep.a;
    rep.a = full;
    return rep;
  }

  // fixed_active: the first Q_F elements always on, the rest switched off
  const int qf = fixed_active_count(cfg);
  const double opi = u.p_bias_w + u.p_dc_w;
  if (qf < 1) {
    SolveReport rep;
    rep.status = SolveStatus::infeasible;
    rep.feasible = false;
    rep.a = CVec::Zero(ch.Q);
    rep.detail = "budget below the on-power of a single RE";
    return rep;
  }

  const ChannelRealization sub = slice_res(ch, qf);
  FpEnv e;
  e.ch = &sub;
  e.dec = sinr_decomposition(sub, u.p_w, u.sigma_r2, u.sigma_s2);
  e.ep = ep_diag(sub.H_t, u.p_w, u.sigma_r2);
  e.p_w = u.p_w;
  e.sigma_r2 = u.sigma_r2;
  e.sigma_s2 = u.sigma_s2;
  e.alpha_max = u.alpha_max;
  e.budget_w = u.p_ris_w - qf * opi;
  e.report_pm = {PowerModelKind::ActiveOriginal, u.p_bias_w, u.p_dc_w, u.xi};
  e.ea_fixed = u.xi * e.ep;
  e.tol = cfg.tol;

  const MinInterferenceResult mi = min_interference_qcqp(sub, u.p_w, u.alpha_max);
  CVec init = mi.status == SolveStatus::optimal ? mi.a : CVec::Zero(qf);
  init = scale_into_budget(init, e.ea_fixed, e.budget_w);

  SolveReport rep = run_fp(e, init, false);
  CVec full = CVec::Zero(ch.Q);
  full.head(qf) = rep.a;
  rep.a = full;
  return rep;
}

}  // namespace risbf
