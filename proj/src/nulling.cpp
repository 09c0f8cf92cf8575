#include "risbf/nulling.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>
#include <stdexcept>

namespace risbf {

CVec nulling_closed_form(const ChannelRealization& ch, double rank_tol) {
  const int m = static_cast<int>(ch.pairs.size());
  if (ch.Q < m)
    throw std::invalid_argument(
        "nulling_closed_form: the number of REs should be greater than the "
        "number of interference channels");
  if (ch.h_d_stack.norm() == 0.0) return CVec::Zero(ch.Q);

  Eigen::JacobiSVD<CMat> svd(ch.H_b_stack);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= rank_tol * sv(0))
    throw std::invalid_argument(
        "nulling_closed_form: cascaded interference matrix is numerically "
        "rank deficient");

  // min-norm solution of the underdetermined system H_b^H a = -h_d
  Eigen::CompleteOrthogonalDecomposition<CMat> cod(ch.H_b_stack.adjoint());
  return cod.solve((-ch.h_d_stack).eval());
}

MinInterferenceResult min_interference_qcqp(const ChannelRealization& ch,
                                            const RVec& p_w, double alpha_max,
                                            double tol) {
  const int m = static_cast<int>(ch.pairs.size());
  RVec w(m);
  for (int c = 0; c < m; ++c) w(c) = p_w(ch.pairs[c].second);

  MinInterferenceResult out;
  const double base = w.dot(ch.h_d_stack.cwiseAbs2());
  if (alpha_max <= 0.0) {
    out.status = SolveStatus::optimal;
    out.a = CVec::Zero(ch.Q);
    out.residual_power = base;
    return out;
  }

  ConvexQuadraticProgram p;
  p.Q = ch.Q;
  p.has_quad = true;
  p.quad.c0 = -base;
  p.quad.l = -(ch.H_b_stack * ch.h_d_stack.cwiseProduct(w.cast<cplx>()));
  p.quad.F = ch.H_b_stack * w.cwiseSqrt().asDiagonal();
  p.u = RVec::Constant(ch.Q, alpha_max);

  QcqpResult r = solve_qcqp(p, tol);
  out.status = r.status;
  out.a = r.a;
  out.residual_power = std::max(0.0, -r.objective);
  return out;
}

NullingTable nulling_success_probability(const std::vector<int>& q_list,
                                         const std::vector<double>& alpha_max_sq_db_list,
                                         int trials, std::uint64_t seed, int K,
                                         double gain_ratio_db, double p_over_sigma_db) {
  const double sigma_s2 = 1.0;
  const double threshold = 1e-3 * sigma_s2;
  const RVec p_w = RVec::Constant(K, sigma_s2 * db_to_pow(p_over_sigma_db));
  int q_max = 1;
  for (int q : q_list) q_max = std::max(q_max, q);

  NullingTable table;
  table.records.resize(q_list.size() * alpha_max_sq_db_list.size() * trials);
  const size_t stride_a = trials;
  const size_t stride_q = alpha_max_sq_db_list.size() * stride_a;

  for (int t = 0; t < trials; ++t) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(t));
    const ChannelRealization full = sample_iid_setup(q_max, K, gain_ratio_db, rng);
    for (size_t qi = 0; qi < q_list.size(); ++qi) {
      const ChannelRealization ch = slice_res(full, q_list[qi]);
      for (size_t ai = 0; ai < alpha_max_sq_db_list.size(); ++ai) {
        const double amax = db_to_amp(alpha_max_sq_db_list[ai]);
        const MinInterferenceResult r = min_interference_qcqp(ch, p_w, amax);
        NullingTrialRecord& rec = table.records[qi * stride_q + ai * stride_a + t];
        rec.q = q_list[qi];
        rec.alpha_max_sq_db = alpha_max_sq_db_list[ai];
        rec.trial = t;
        rec.residual_power = r.residual_power;
        rec.success = r.status == SolveStatus::optimal && r.residual_power <= threshold;
      }
    }
  }

  for (size_t qi = 0; qi < q_list.size(); ++qi)
    for (size_t ai = 0; ai < alpha_max_sq_db_list.size(); ++ai) {
      NullingCell cell;
      cell.q = q_list[qi];
      cell.alpha_max_sq_db = alpha_max_sq_db_list[ai];
      cell.trials = trials;
      int wins = 0;
      for (int t = 0; t < trials; ++t)
        wins += table.records[qi * stride_q + ai * stride_a + t].success ? 1 : 0;
      cell.success_prob = trials > 0 ? double(wins) / trials : 0.0;
      table.cells.push_back(cell);
    }
  return table;
}

}  // namespace risbf
