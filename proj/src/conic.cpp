#include "risbf/conic.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <cstdio>
#include <cstdlib>

namespace risbf {

double QuadForm::value(const CVec& a) const {
  double v = c0;
  if (l.size()) v += 2.0 * std::real(l.dot(a));
  if (d.size()) v -= d.dot(a.cwiseAbs2());
  if (F.cols()) v -= (F.adjoint() * a).squaredNorm();
  return v;
}

namespace {

// Real lifting x = [Re a; Im a]; gradients and the factor part of Hessians are
// cached per form. G is the lifted factor: ||F^H a||^2 = ||G^T x||^2.
struct LiftedForm {
  double c0 = 0;
  RVec l2;   // gradient of 2 Re(l^H a); empty if l empty
  RVec d;    // empty if none
  RMat G;    // 2Q x 2r; empty if none
  const QuadForm* src = nullptr;

  double value(const CVec& a) const { return src->value(a); }

  RVec grad(const RVec& x, int Q) const {
    RVec g = RVec::Zero(2 * Q);
    if (l2.size()) g = l2;
    if (d.size()) {
      g.head(Q) -= 2.0 * d.cwiseProduct(x.head(Q));
      g.tail(Q) -= 2.0 * d.cwiseProduct(x.tail(Q));
    }
    if (G.cols()) g.noalias() -= 2.0 * (G * (G.transpose() * x));
    return g;
  }
};

LiftedForm lift(const QuadForm& f, int Q) {
  LiftedForm out;
  out.src = &f;
  out.c0 = f.c0;
  if (f.l.size()) {
    out.l2.resize(2 * Q);
    out.l2.head(Q) = 2.0 * f.l.real();
    out.l2.tail(Q) = 2.0 * f.l.imag();
  }
  out.d = f.d;
  if (f.F.cols()) {
    const int r = static_cast<int>(f.F.cols());
    out.G.resize(2 * Q, 2 * r);
    out.G.topLeftCorner(Q, r) = f.F.real();
    out.G.topRightCorner(Q, r) = -f.F.imag();
    out.G.bottomLeftCorner(Q, r) = f.F.imag();
    out.G.bottomRightCorner(Q, r) = f.F.real();
  }
  return out;
}

CVec to_complex(const RVec& x, int Q) {
  CVec a(Q);
  a.real() = x.head(Q);
  a.imag() = x.tail(Q);
  return a;
}

// 2x2 block diagonal over index pairs (q, q+Q)
struct BlockDiag {
  RVec d00, d01, d11;
  void init(int Q) {
    d00 = RVec::Zero(Q);
    d01 = RVec::Zero(Q);
    d11 = RVec::Zero(Q);
  }
  void add_iso(int q, double v) {
    d00(q) += v;
    d11(q) += v;
  }
  RVec solve(const RVec& r) const {
    const int Q = static_cast<int>(d00.size());
    RVec y(2 * Q);
    for (int q = 0; q < Q; ++q) {
      const double det = d00(q) * d11(q) - d01(q) * d01(q);
      y(q) = (d11(q) * r(q) - d01(q) * r(q + Q)) / det;
      y(q + Q) = (-d01(q) * r(q) + d00(q) * r(q + Q)) / det;
    }
    return y;
  }
  RMat solve(const RMat& R) const {
    RMat Y(R.rows(), R.cols());
    for (int c = 0; c < R.cols(); ++c) Y.col(c) = solve(RVec(R.col(c)));
    return Y;
  }
};

struct QcqpWork {
  int Q = 0;
  std::vector<LiftedForm> logs, cons;
  LiftedForm quad;
  bool has_quad = false;
  RVec u;
  double sc = 1.0;  // objective normalization (applied to the quad term)

  double objective(const CVec& a) const {
    double f = 0;
    for (const auto& t : logs) {
      const double v = t.value(a);
      if (v <= 0) return -std::numeric_limits<double>::infinity();
      f += std::log(v);
    }
    if (has_quad) f += quad.value(a) * sc;
    return f;
  }

  bool domain_ok(const CVec& a, const RVec& x) const {
    for (const auto& t : logs)
      if (t.value(a) <= 0) return false;
    for (const auto& t : cons)
      if (t.value(a) <= 0) return false;
    for (int q = 0; q < Q; ++q)
      if (u(q) * u(q) - x(q) * x(q) - x(q + Q) * x(q + Q) <= 0) return false;
    return true;
  }

  double barrier_obj(double t, const CVec& a, const RVec& x) const {
    double phi = t * objective(a);
    for (const auto& c : cons) {
      const double s = c.value(a);
      if (s <= 0) return -std::numeric_limits<double>::infinity();
      phi += std::log(s);
    }
    for (int q = 0; q < Q; ++q) {
      const double s = u(q) * u(q) - x(q) * x(q) - x(q + Q) * x(q + Q);
      if (s <= 0) return -std::numeric_limits<double>::infinity();
      phi += std::log(s);
    }
    return phi;
  }
};

}  // namespace

QcqpResult solve_qcqp(const ConvexQuadraticProgram& p, double tol) {
  QcqpResult res;
  const int Q = p.Q;
  QcqpWork w;
  w.Q = Q;
  w.u = p.u;
  for (const auto& f : p.logs) w.logs.push_back(lift(f, Q));
  for (const auto& f : p.cons) w.cons.push_back(lift(f, Q));
  w.has_quad = p.has_quad;
  if (p.has_quad) w.quad = lift(p.quad, Q);

  RVec x(2 * Q);
  CVec a = p.x0.size() ? p.x0 : CVec(CVec::Zero(Q));
  x.head(Q) = a.real();
  x.tail(Q) = a.imag();
  if (!w.domain_ok(a, x)) {
    res.status = SolveStatus::numerical_failure;
    res.a = a;
    return res;
  }

  // normalize a pure-quadratic objective so tol acts relatively
  if (w.has_quad && w.logs.empty()) {
    const double f0 = std::abs(w.quad.value(a));
    const double g0 = 0.25 * w.quad.grad(x, Q).squaredNorm();
    double data = std::abs(w.quad.c0);
    const double umax = p.u.size() ? p.u.maxCoeff() : 1.0;
    if (w.quad.l2.size()) data += w.quad.l2.norm() * umax;
    if (w.quad.d.size()) data += w.quad.d.sum() * umax * umax;
    if (w.quad.G.cols()) data += w.quad.G.squaredNorm() * umax * umax;
    w.sc = 1.0 / std::max({f0, g0, 1e-12 * data, 1e-300});
  }

  const int m_barrier = static_cast<int>(w.cons.size()) + Q;
  double t = 1.0;
  const double t_mult = 20.0;
  const int max_stages = 64;
  int total_newton = 0;

  for (int stage = 0; stage < max_stages; ++stage) {
    for (int it = 0; it < 60; ++it) {
      ++total_newton;
      BlockDiag D;
      D.init(Q);
      RVec g = RVec::Zero(2 * Q);
      std::vector<RVec> ucols;
      std::vector<RMat> ublocks;

      auto add_form = [&](const LiftedForm& f, double weight, double outer_w) {
        // contributes weight * (2 D_hat + 2 G G^T) to H and outer_w * grad grad^T
        if (f.d.size())
          for (int q = 0; q < Q; ++q) D.add_iso(q, 2.0 * weight * f.d(q));
        if (f.G.cols()) ublocks.push_back(std::sqrt(2.0 * weight) * f.G);
        if (outer_w > 0) ucols.push_back(std::sqrt(outer_w) * f.grad(x, Q));
      };

      for (const auto& lf : w.logs) {
        const double v = lf.value(a);
        g += (t / v) * lf.grad(x, Q);
        add_form(lf, t / v, t / (v * v));
      }
      if (w.has_quad) {
        g += (t * w.sc) * w.quad.grad(x, Q);
        add_form(w.quad, t * w.sc, 0.0);
      }
      for (const auto& cf : w.cons) {
        const double s = cf.value(a);
        g += (1.0 / s) * cf.grad(x, Q);
        add_form(cf, 1.0 / s, 1.0 / (s * s));
      }
      for (int q = 0; q < Q; ++q) {
        const double s = w.u(q) * w.u(q) - x(q) * x(q) - x(q + Q) * x(q + Q);
        g(q) += -2.0 * x(q) / s;
        g(q + Q) += -2.0 * x(q + Q) / s;
        D.add_iso(q, 2.0 / s);
        const double c = 4.0 / (s * s);
        D.d00(q) += c * x(q) * x(q);
        D.d01(q) += c * x(q) * x(q + Q);
        D.d11(q) += c * x(q + Q) * x(q + Q);
      }

      int r_tot = static_cast<int>(ucols.size());
      for (const auto& b : ublocks) r_tot += static_cast<int>(b.cols());
      RVec dx;
      if (r_tot == 0) {
        dx = D.solve(g);
      } else {
        RMat U(2 * Q, r_tot);
        int c0 = 0;
        for (const auto& c : ucols) U.col(c0++) = c;
        for (const auto& b : ublocks) {
          U.middleCols(c0, b.cols()) = b;
          c0 += static_cast<int>(b.cols());
        }
        const RVec Dg = D.solve(g);
        const RMat DU = D.solve(U);
        RMat M = RMat::Identity(r_tot, r_tot);
        M.noalias() += U.transpose() * DU;
        dx = Dg - DU * M.ldlt().solve(U.transpose() * Dg);
      }

      const double lambda2 = g.dot(dx);
      if (!(lambda2 > 0) || !std::isfinite(lambda2)) break;
      if (lambda2 <= 1e-11 * (1.0 + std::abs(t))) break;

      const double phi0 = w.barrier_obj(t, a, x);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        const RVec xn = x + alpha * dx;
        const CVec an = to_complex(xn, Q);
        const double phin = w.barrier_obj(t, an, xn);
        if (std::isfinite(phin) && phin >= phi0 + 0.25 * alpha * lambda2) {
          x = xn;
          a = an;
          moved = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!moved) break;
    }
    if (m_barrier / t <= tol) break;
    t *= t_mult;
  }

  res.status = (m_barrier / t <= tol) ? SolveStatus::optimal : SolveStatus::max_iters;
  res.a = a;
  double obj = 0;
  for (const auto& lf : w.logs) obj += std::log(lf.value(a));
  if (w.has_quad) obj += w.quad.value(a);
  res.objective = obj;
  res.newton_steps = total_newton;
  res.gap = m_barrier / t / (w.has_quad && w.logs.empty() ? w.sc : 1.0);
  return res;
}

// ---------------------------------------------------------------------------
// SDP: dual barrier interior point with primal recovery A = mu * S(y)^{-1}.
// ---------------------------------------------------------------------------

double SdpMatrix::dot(const CMat& A) const {
  double v = 0;
  if (dg.size()) v += dg.dot(A.diagonal().real());
  for (int c = 0; c < W.cols(); ++c)
    v += ws(c) * std::real(W.col(c).dot(A * W.col(c)));
  return v;
}

void SdpMatrix::add_to(CMat& S, double scale, int n) const {
  if (dg.size()) S.diagonal() += scale * dg.cast<cplx>();
  for (int c = 0; c < W.cols(); ++c)
    S.noalias() += (scale * ws(c)) * (W.col(c) * W.col(c).adjoint());
  (void)n;
}

CMat SdpMatrix::dense(int n) const {
  CMat S = CMat::Zero(n, n);
  add_to(S, 1.0, n);
  return S;
}

double SdpMatrix::fro_norm(int n) const { return dense(n).norm(); }

namespace {

struct CanonCon {
  SdpMatrix G;   // S = C - sum y_i G_i
  double b = 0;  // dual objective coefficient
  bool barrier = false;  // true for inequalities (y_i > 0)
  int singleton = -1;    // diagonal index if G = +/- e_q e_q^T
  double singleton_sign = 0;
};

struct DualState {
  int n = 0;
  CMat C;
  std::vector<CanonCon> cons;

  CMat S_of(const RVec& y) const {
    CMat S = C;
    for (size_t i = 0; i < cons.size(); ++i) cons[i].G.add_to(S, -y(i), n);
    return S;
  }
};

bool chol_ok(const CMat& S, Eigen::LLT<CMat>& llt) {
  llt.compute(S);
  return llt.info() == Eigen::Success;
}

double logdet_from_llt(const Eigen::LLT<CMat>& llt) {
  double v = 0;
  const auto& L = llt.matrixLLT();
  for (int i = 0; i < L.rows(); ++i) v += std::log(std::real(L(i, i)));
  return 2.0 * v;
}

// strictly feasible dual start: tiny multipliers on general constraints, then
// Gershgorin diagonal boosts through singleton constraints
bool initial_dual_point(const DualState& d, RVec& y) {
  const int m = static_cast<int>(d.cons.size());
  const int n = d.n;
  y = RVec::Zero(m);
  double data_scale = d.C.norm();
  for (const auto& c : d.cons) data_scale = std::max(data_scale, std::abs(c.b));
  const double delta = 1e-8 * (1.0 + data_scale);
  for (int i = 0; i < m; ++i)
    if (d.cons[i].barrier) y(i) = delta;

  for (int attempt = 0; attempt < 40; ++attempt) {
    CMat S = d.S_of(y);
    // boost diagonals to strict dominance where a singleton handle exists
    RVec offsum = RVec::Zero(n);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c)
        if (c != r) offsum(r) += std::abs(S(r, c));
    }
    const double margin = 1e-3 * (1.0 + S.cwiseAbs().maxCoeff());
    RVec boost = RVec::Zero(n);
    for (int r = 0; r < n; ++r)
      boost(r) = std::max(0.0, offsum(r) + margin - std::real(S(r, r)));
    RVec y2 = y;
    for (int i = 0; i < m; ++i) {
      const auto& cc = d.cons[i];
      if (cc.singleton < 0 || boost(cc.singleton) <= 0) continue;
      // S -= y G with G = sign * e_q e_q^T; pushing diagonal up means
      // y moves by -boost/sign (allowed for free duals, or when it keeps y > 0)
      const double move = -boost(cc.singleton) / cc.singleton_sign;
      if (cc.barrier && y2(i) + move <= 0) continue;
      y2(i) += move;
      boost(cc.singleton) = 0;
    }
    Eigen::LLT<CMat> llt;
    if (chol_ok(d.S_of(y2), llt)) {
      y = y2;
      return true;
    }
    // shrink the general multipliers and retry
    for (int i = 0; i < m; ++i)
      if (d.cons[i].barrier && d.cons[i].singleton < 0) y(i) *= 0.1;
  }
  Eigen::LLT<CMat> llt;
  return chol_ok(d.S_of(y), llt);
}

struct BarrierRun {
  SolveStatus status = SolveStatus::numerical_failure;
  RVec y;
  CMat A;
  double mu = 0;
  double primal_obj = 0;  // C . A in the scaled data
  double dual_obj = 0;    // b^T y
  int newtons = 0;
};

// maximize b^T y + mu (logdet S + sum_ineq log y_i); stops as soon as the
// certified dual bound b^T y exceeds early_exit_thresh (phase-I use).
BarrierRun run_dual_barrier(const DualState& d, double tol, const RVec* warm_y,
                            double warm_mu, double early_exit_thresh) {
  BarrierRun out;
  const int m = static_cast<int>(d.cons.size());
  const int n = d.n;
  int n_ineq = 0;
  for (const auto& c : d.cons)
    if (c.barrier) ++n_ineq;

  RVec y;
  Eigen::LLT<CMat> llt;
  bool have_start = false;
  if (warm_y && warm_y->size() == m) {
    RVec base;
    if (initial_dual_point(d, base)) {
      for (double blend : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        RVec cand = (1.0 - blend) * (*warm_y) + blend * base;
        bool pos = true;
        for (int i = 0; i < m; ++i)
          if (d.cons[i].barrier && cand(i) <= 0) pos = false;
        if (pos && chol_ok(d.S_of(cand), llt)) {
          y = cand;
          have_start = true;
          break;
        }
      }
    }
  }
  if (!have_start) {
    if (!initial_dual_point(d, y)) return out;
    if (!chol_ok(d.S_of(y), llt)) return out;
  }

  RVec bvec(m);
  for (int i = 0; i < m; ++i) bvec(i) = d.cons[i].b;

  double mu = (warm_y && warm_mu > 0) ? warm_mu : std::max(1.0, std::abs(bvec.dot(y)));
  const double mu_shrink = 0.15;
  const int max_stages = 80;

  auto psi = [&](const RVec& yy, Eigen::LLT<CMat>& ll) {
    double v = bvec.dot(yy);
    v += mu * logdet_from_llt(ll);
    for (int i = 0; i < m; ++i)
      if (d.cons[i].barrier) v += mu * std::log(yy(i));
    return v;
  };

  CMat S = d.S_of(y);
  chol_ok(S, llt);

  std::vector<int> gen_idx, sing_idx;
  for (int i = 0; i < m; ++i)
    (d.cons[i].singleton < 0 ? gen_idx : sing_idx).push_back(i);

  for (int stage = 0; stage < max_stages; ++stage) {
    bool stalled = false;
    for (int it = 0; it < 60; ++it) {
      ++out.newtons;
      const CMat P = llt.solve(CMat::Identity(n, n));
      const RMat Pabs2 = P.cwiseAbs2();

      // per-constraint helpers
      std::vector<double> trPG(m);
      std::vector<RVec> hdiag(m);       // diag(P G_j P), general j only
      std::vector<CMat> Y(m);           // P * W_j
      for (int j : gen_idx) {
        const auto& G = d.cons[j].G;
        RVec h = RVec::Zero(n);
        double tr = 0;
        if (G.dg.size()) {
          h += Pabs2 * G.dg;
          tr += G.dg.dot(P.diagonal().real());
        }
        if (G.W.cols()) {
          Y[j] = P * G.W;
          for (int c = 0; c < G.W.cols(); ++c) {
            h += G.ws(c) * Y[j].col(c).cwiseAbs2();
            tr += G.ws(c) * std::real(G.W.col(c).dot(Y[j].col(c)));
          }
        }
        hdiag[j] = h;
        trPG[j] = tr;
      }
      for (int j : sing_idx) {
        const auto& cc = d.cons[j];
        trPG[j] = cc.singleton_sign * std::real(P(cc.singleton, cc.singleton));
      }

      RVec grad(m);
      for (int i = 0; i < m; ++i) {
        grad(i) = bvec(i) - mu * trPG[i];
        if (d.cons[i].barrier) grad(i) += mu / y(i);
      }

      RMat H(m, m);
      for (int ii = 0; ii < m; ++ii) {
        for (int jj = ii; jj < m; ++jj) {
          const auto& ci = d.cons[ii];
          const auto& cj = d.cons[jj];
          double v = 0;
          if (ci.singleton >= 0 && cj.singleton >= 0) {
            v = ci.singleton_sign * cj.singleton_sign *
                Pabs2(ci.singleton, cj.singleton);
          } else if (ci.singleton >= 0) {
            v = ci.singleton_sign * hdiag[jj](ci.singleton);
          } else if (cj.singleton >= 0) {
            v = cj.singleton_sign * hdiag[ii](cj.singleton);
          } else {
            const auto& Gi = ci.G;
            const auto& Gj = cj.G;
            if (Gi.dg.size() && Gj.dg.size()) v += Gi.dg.dot(Pabs2 * Gj.dg);
            if (Gi.dg.size() && Gj.W.cols())
              for (int c = 0; c < Gj.W.cols(); ++c)
                v += Gj.ws(c) * Gi.dg.dot(Y[jj].col(c).cwiseAbs2());
            if (Gj.dg.size() && Gi.W.cols())
              for (int c = 0; c < Gi.W.cols(); ++c)
                v += Gi.ws(c) * Gj.dg.dot(Y[ii].col(c).cwiseAbs2());
            if (Gi.W.cols() && Gj.W.cols()) {
              const CMat M = Gi.W.adjoint() * Y[jj];
              for (int ci2 = 0; ci2 < Gi.W.cols(); ++ci2)
                for (int cj2 = 0; cj2 < Gj.W.cols(); ++cj2)
                  v += Gi.ws(ci2) * Gj.ws(cj2) * std::norm(M(ci2, cj2));
            }
          }
          v *= mu;
          if (ii == jj && d.cons[ii].barrier) v += mu / (y(ii) * y(ii));
          H(ii, jj) = v;
          H(jj, ii) = v;
        }
      }

      const RVec dy = H.ldlt().solve(grad);
      const double lambda2 = grad.dot(dy);
      if (!(lambda2 > 0) || !std::isfinite(lambda2)) break;
      if (lambda2 / mu <= 1e-9) break;

      Eigen::LLT<CMat> llt_try;
      const double phi0 = psi(y, llt);
      double alpha = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls) {
        RVec yn = y + alpha * dy;
        bool pos = true;
        for (int i = 0; i < m; ++i)
          if (d.cons[i].barrier && yn(i) <= 0) pos = false;
        if (pos && chol_ok(d.S_of(yn), llt_try)) {
          const double phin = psi(yn, llt_try);
          if (std::isfinite(phin) && phin >= phi0 + 0.25 * alpha * lambda2) {
            y = yn;
            llt = llt_try;
            moved = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!moved) {
        stalled = true;
        break;
      }
      if (bvec.dot(y) > early_exit_thresh) break;
    }

    if (std::getenv("RISBF_SDP_DEBUG")) {
      const CMat Pd = llt.solve(CMat::Identity(n, n));
      double gmax = 0;
      for (int i = 0; i < m; ++i) {
        double tr = 0;
        CMat Gd = d.cons[i].G.dense(n);
        tr = std::real((Gd * Pd).trace());
        double g = bvec(i) - mu * tr;
        if (d.cons[i].barrier) g += mu / y(i);
        gmax = std::max(gmax, std::abs(g));
      }
      std::fprintf(stderr, "stage=%d mu=%.3e dualobj=%.12e gradmax=%.3e newtons=%d\n",
                   stage, mu, bvec.dot(y), gmax, out.newtons);
    }
    out.dual_obj = bvec.dot(y);
    if (out.dual_obj > early_exit_thresh) {
      out.status = SolveStatus::infeasible;
      out.y = y;
      out.mu = mu;
      return out;
    }
    const CMat P = llt.solve(CMat::Identity(n, n));
    out.A = mu * P;
    out.primal_obj = std::real((d.C * out.A).trace());
    const double gap = mu * (n + n_ineq);
    if (gap <= tol * std::max(1.0, std::abs(out.primal_obj))) {
      out.status = SolveStatus::optimal;
      out.y = y;
      out.mu = mu;
      return out;
    }
    if (stalled) {
      // line search hit the floating-point floor of psi; the dual bound is
      // still certified, so accept if the path got reasonably far
      out.status = gap <= 1e-6 * std::max(1.0, std::abs(out.primal_obj))
                       ? SolveStatus::optimal
                       : SolveStatus::max_iters;
      out.y = y;
      out.mu = mu;
      return out;
    }
    mu *= mu_shrink;
  }
  out.status = SolveStatus::max_iters;
  out.y = y;
  out.mu = mu;
  return out;
}

}  // namespace

SdpResult solve_sdp(const SemidefiniteProgram& p, double tol, bool skip_phase1) {
  SdpResult res;
  const int n = p.n;

  auto canonicalize = [&](const SemidefiniteProgram& prob, DualState& d) {
    d.n = prob.n;
    d.C = prob.C.dense(prob.n);
    const double csc = d.C.norm();
    const double cscale = csc > 0 ? 1.0 / csc : 1.0;
    d.C *= cscale;
    for (const auto& con : prob.cons) {
      CanonCon cc;
      const double gn = con.G.fro_norm(prob.n);
      const double gs = gn > 0 ? 1.0 / gn : 1.0;
      double sgn = (con.sense == ConSense::le) ? -1.0 : 1.0;
      cc.G = con.G;
      if (cc.G.dg.size()) cc.G.dg *= sgn * gs;
      if (cc.G.W.cols()) cc.G.ws *= sgn * gs;
      cc.b = sgn * gs * con.rhs;
      cc.barrier = (con.sense != ConSense::eq);
      // singleton detection on the scaled matrix
      if (cc.G.W.cols() == 0 && cc.G.dg.size()) {
        int nz = -1, count = 0;
        for (int q = 0; q < cc.G.dg.size(); ++q)
          if (cc.G.dg(q) != 0.0) {
            nz = q;
            ++count;
          }
        if (count == 1) {
          cc.singleton = nz;
          cc.singleton_sign = cc.G.dg(nz);
        }
      }
      d.cons.push_back(std::move(cc));
    }
    return cscale;
  };

  if (!skip_phase1) {
    // slack block on >= constraints; bounded by the compact box the <= / eq
    // constraints impose on diag(A)
    SemidefiniteProgram ph;
    ph.n = n + 1;
    double diag_box = 1.0, bmax = 0.0;
    for (const auto& con : p.cons) {
      if (con.sense != ConSense::ge) {
        if (con.G.dg.size() && con.G.W.cols() == 0) diag_box += std::abs(con.rhs);
        continue;
      }
      bmax = std::max(bmax, std::abs(con.rhs) / std::max(con.G.fro_norm(n), 1e-300));
    }
    // tiny uniform diagonal keeps the phase-I dual strictly feasible even on
    // diagonals no constraint reaches; its Tr(A) contribution is absorbed by
    // the verdict threshold below
    const double eta = 1e-10;
    ph.C.dg = RVec::Constant(n + 1, eta);
    ph.C.dg(n) = 1.0;
    for (const auto& con : p.cons) {
      SdpConstraint c2 = con;
      if (c2.G.dg.size()) {
        RVec d2 = RVec::Zero(n + 1);
        d2.head(n) = c2.G.dg;
        c2.G.dg = d2;
      }
      if (c2.G.W.cols()) {
        CMat W2 = CMat::Zero(n + 1, c2.G.W.cols());
        W2.topRows(n) = c2.G.W;
        c2.G.W = W2;
      }
      if (con.sense == ConSense::ge) {
        const double gn = std::max(con.G.fro_norm(n), 1e-300);
        if (!c2.G.dg.size()) c2.G.dg = RVec::Zero(n + 1);
        c2.G.dg(n) = gn;  // slack enters with the constraint's own scale
      }
      ph.cons.push_back(std::move(c2));
    }
    const double B = 10.0 * (1.0 + bmax + diag_box * std::sqrt(double(n)));
    SdpConstraint tb;
    tb.G.dg = RVec::Zero(n + 1);
    tb.G.dg(n) = 1.0;
    tb.rhs = B;
    tb.sense = ConSense::le;
    ph.cons.push_back(tb);

    DualState d1;
    canonicalize(ph, d1);
    const double thr = 1e-9 * (1.0 + B) + 1e-8 * diag_box;
    BarrierRun r1 = run_dual_barrier(d1, 1e-6, nullptr, 0, thr);
    if (r1.status == SolveStatus::numerical_failure) return res;
    // r1.dual_obj is a certified lower bound on the least achievable slack
    if (r1.status == SolveStatus::infeasible || r1.dual_obj > thr) {
      res.status = SolveStatus::infeasible;
      return res;
    }
  }

  DualState d;
  const double cscale = canonicalize(p, d);
  BarrierRun r = run_dual_barrier(
      d, tol, nullptr, 0, std::numeric_limits<double>::infinity());
  res.iters = r.newtons;
  if (r.status == SolveStatus::numerical_failure) return res;
  res.A = 0.5 * (r.A + r.A.adjoint());
  // the dual bound is certified by the Cholesky of S; the recovered primal
  // matrix can carry centering error, so it is not used for the objective
  res.objective = r.dual_obj / cscale;
  res.gap = (r.primal_obj - r.dual_obj) / cscale;
  res.status = r.status;
  return res;
}

}  // namespace risbf
