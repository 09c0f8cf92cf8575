#include "risbf/scenario.hpp"

#include <numbers>
#include <stdexcept>

namespace risbf {

double pathloss_db(double distance_m, LinkKind kind) {
  if (!(distance_m > 0.0))
    throw std::invalid_argument("pathloss_db: distance must be positive");
  const double slope = (kind == LinkKind::ris_link) ? 22.0 : 40.0;
  return -30.0 - slope * std::log10(distance_m);
}

CVec steering_vector(double azimuth, double elevation, int Q1, int Q2,
                     double d1_m, double d2_m, double wavelength_m) {
  if (Q1 < 1 || Q2 < 1)
    throw std::invalid_argument("steering_vector: Q1 and Q2 must be >= 1");
  if (!(wavelength_m > 0.0))
    throw std::invalid_argument("steering_vector: wavelength must be positive");
  const int Q = Q1 * Q2;
  const double k0 = 2.0 * std::numbers::pi / wavelength_m;
  const double ph1 = k0 * d1_m * std::sin(azimuth) * std::cos(elevation);
  const double ph2 = k0 * d2_m * std::sin(elevation);
  CVec v(Q);
  for (int q = 0; q < Q; ++q) {
    const int i1 = q % Q1;
    const int i2 = q / Q2;
    v(q) = std::polar(1.0, i1 * ph1 + i2 * ph2);
  }
  return v;
}

CVec ChannelRealization::h_b(int k, int j) const {
  return H_t.col(j).conjugate().cwiseProduct(H_r.col(k).conjugate());
}

void populate_cascade(ChannelRealization& ch) {
  ch.K = static_cast<int>(ch.h_d.rows());
  ch.Q = static_cast<int>(ch.H_t.rows());
  const int m = ch.K * (ch.K - 1);
  ch.H_b_stack.resize(ch.Q, m);
  ch.h_d_stack.resize(m);
  ch.pairs.clear();
  ch.pairs.reserve(m);
  int c = 0;
  for (int j = 0; j < ch.K; ++j) {
    for (int k = 0; k < ch.K; ++k) {
      if (k == j) continue;
      ch.H_b_stack.col(c) = ch.h_b(k, j);
      ch.h_d_stack(c) = ch.h_d(k, j);
      ch.pairs.emplace_back(k, j);
      ++c;
    }
  }
}

ChannelRealization slice_res(const ChannelRealization& ch, int q) {
  if (q < 1 || q > ch.Q) throw std::invalid_argument("slice_res: bad element count");
  ChannelRealization out;
  out.h_d = ch.h_d;
  out.H_t = ch.H_t.topRows(q);
  out.H_r = ch.H_r.topRows(q);
  populate_cascade(out);
  return out;
}

namespace {

cplx cn01(std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  const double re = n01(rng);
  const double im = n01(rng);
  return cplx(re, im) / std::numbers::sqrt2;
}

struct RisLink {
  double rho;
  double azimuth, elevation;
};

RisLink link_geometry(const ScenarioConfig& cfg, const Eigen::Vector3d& pos) {
  const Eigen::Vector3d d = pos - cfg.ris_origin;
  RisLink g;
  const double dist = d.norm();
  g.rho = db_to_amp(cfg.pl_ris_intercept_db - cfg.pl_ris_slope * std::log10(dist));
  g.azimuth = std::atan2(d.y(), d.x());
  g.elevation = std::atan2(d.z(), std::hypot(d.x(), d.y()));
  return g;
}

CVec rician_draw(const ScenarioConfig& cfg, const RisLink& g, std::mt19937_64& rng) {
  const int Q = cfg.Q();
  const double k = cfg.rician_kappa;
  const CVec v = steering_vector(g.azimuth, g.elevation, cfg.Q1, cfg.Q2,
                                 cfg.d1_m, cfg.d2_m, cfg.wavelength_m);
  CVec n(Q);
  for (int q = 0; q < Q; ++q) n(q) = cn01(rng);
  return g.rho * (std::sqrt(k / (1.0 + k)) * v + std::sqrt(1.0 / (1.0 + k)) * n);
}

}  // namespace

ChannelRealization sample_channels(const ScenarioConfig& cfg, std::mt19937_64& rng) {
  const int K = cfg.K;
  const int Q = cfg.Q();
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto draw_pos = [&](const Rect& r) {
    return Eigen::Vector3d(r.x0 + (r.x1 - r.x0) * u01(rng),
                           r.y0 + (r.y1 - r.y0) * u01(rng), cfg.user_z);
  };
  std::vector<Eigen::Vector3d> tx(K), rx(K);
  for (int k = 0; k < K; ++k) tx[k] = draw_pos(cfg.tx_area);
  for (int k = 0; k < K; ++k) rx[k] = draw_pos(cfg.rx_area);

  ChannelRealization ch;
  ch.H_t.resize(Q, K);
  ch.H_r.resize(Q, K);
  ch.h_d.resize(K, K);
  for (int k = 0; k < K; ++k) ch.H_t.col(k) = rician_draw(cfg, link_geometry(cfg, tx[k]), rng);
  for (int k = 0; k < K; ++k) ch.H_r.col(k) = rician_draw(cfg, link_geometry(cfg, rx[k]), rng);
  for (int k = 0; k < K; ++k) {
    for (int j = 0; j < K; ++j) {
      const double dist = (rx[k] - tx[j]).norm();
      const double rho =
          db_to_amp(cfg.pl_dir_intercept_db - cfg.pl_dir_slope * std::log10(dist));
      ch.h_d(k, j) = rho * cn01(rng);
    }
  }
  populate_cascade(ch);
  return ch;
}

ChannelRealization sample_iid_setup(int Q, int K, double gain_ratio_db,
                                    std::mt19937_64& rng) {
  ChannelRealization ch;
  ch.H_t.resize(Q, K);
  ch.H_r.resize(Q, K);
  ch.h_d.resize(K, K);
  for (int k = 0; k < K; ++k)
    for (int q = 0; q < Q; ++q) ch.H_t(q, k) = cn01(rng);
  for (int k = 0; k < K; ++k)
    for (int q = 0; q < Q; ++q) ch.H_r(q, k) = cn01(rng);
  const double amp = db_to_amp(gain_ratio_db);
  for (int k = 0; k < K; ++k)
    for (int j = 0; j < K; ++j) ch.h_d(k, j) = amp * cn01(rng);
  populate_cascade(ch);
  return ch;
}

}  // namespace risbf
