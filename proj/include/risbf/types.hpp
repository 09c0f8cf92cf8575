#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace risbf {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_pow(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_amp(double db) { return std::pow(10.0, db / 20.0); }

// Per-trial random streams: stream index mixed into the seed so trials are
// independent of execution order and worker count.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

struct Rect {
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;
};

struct Tolerances {
  double tau_reweight = 1e-3;
  double fp_rel_tol = 1e-4;
  int fp_consecutive = 3;
  int fp_max_iters = 300;
  double dca_rho = 10.0;
  double dca_penalty_tol = 1e-6;
  int dca_max_iters = 100;
  double zero_set_amp_threshold = 1.0;
  double rank_tol = 1e-10;
  double feas_tol = 1e-7;
  double gap_tol = 1e-7;
  double powermin_rel_tol = 1e-3;
  int powermin_max_outer = 20;
};

// Configuration in config-file units (dBm / dB); convert once via linear().
struct ScenarioConfig {
  int K = 4;
  int Q1 = 4, Q2 = 4;
  Rect tx_area{20.0, 60.0, 5.0, 45.0};
  Rect rx_area{20.0, 60.0, -245.0, -205.0};
  double user_z = -20.0;
  Eigen::Vector3d ris_origin{0.0, 0.0, 0.0};
  double wavelength_m = 0.1;
  double d1_m = 0.05, d2_m = 0.05;
  double rician_kappa = 9.0;
  double pl_ris_intercept_db = -30.0, pl_ris_slope = 22.0;
  double pl_dir_intercept_db = -30.0, pl_dir_slope = 40.0;
  double sigma_r_sq_dbm = -100.0;
  double sigma_s_sq_dbm = -100.0;
  RVec p_k_dbm = RVec::Constant(4, 23.0);
  double alpha_max_sq_db = 20.0;
  double p_bias_dbm = -6.0;
  double p_dc_dbm = -10.0;
  double xi = 1.25;
  double p_ris_budget_dbm = 10.0;
  RVec rate_req_bps_hz = RVec::Constant(4, 0.6);
  std::uint64_t seed = 1;
  Tolerances tol;

  int Q() const { return Q1 * Q2; }
};

// Linear-unit view of a ScenarioConfig, computed once at load time.
struct LinearUnits {
  RVec p_w;
  double sigma_r2 = 0, sigma_s2 = 0;
  double alpha_max = 1;
  double p_bias_w = 0, p_dc_w = 0, xi = 1;
  double p_ris_w = 0;
};

inline LinearUnits linear_units(const ScenarioConfig& c) {
  LinearUnits u;
  u.p_w = c.p_k_dbm.unaryExpr([](double v) { return dbm_to_watt(v); });
  u.sigma_r2 = dbm_to_watt(c.sigma_r_sq_dbm);
  u.sigma_s2 = dbm_to_watt(c.sigma_s_sq_dbm);
  u.alpha_max = db_to_amp(c.alpha_max_sq_db);
  u.p_bias_w = dbm_to_watt(c.p_bias_dbm);
  u.p_dc_w = dbm_to_watt(c.p_dc_dbm);
  u.xi = c.xi;
  u.p_ris_w = dbm_to_watt(c.p_ris_budget_dbm);
  return u;
}

enum class PowerModelKind { ActiveSparse, ActiveOriginal, Passive };

struct PowerModel {
  PowerModelKind kind = PowerModelKind::ActiveSparse;
  double p_bias_w = 0;
  double p_dc_w = 0;
  double xi = 1;
};

enum class SolveStatus { optimal, max_iters, infeasible, numerical_failure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iters: return "max_iters";
    case SolveStatus::infeasible: return "infeasible";
    default: return "numerical_failure";
  }
}

struct SolveReport {
  SolveStatus status = SolveStatus::optimal;
  int iterations = 0;      // outer iterations of the calling algorithm
  int inner_iters = 0;     // accumulated subproblem / DCA iterations
  double objective = 0.0;  // sum rate (bps/Hz) or power (W) depending on caller
  CVec a;
  RVec rates;
  double power_w = 0.0;
  int active_res = 0;
  bool feasible = true;
  std::vector<double> trajectory;
  std::string detail;
};

}  // namespace risbf
