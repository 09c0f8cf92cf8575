#pragma once

#include <utility>

#include "risbf/types.hpp"

namespace risbf {

enum class LinkKind { ris_link, direct };

// Channel gain in dB: -30 - 22*log10(d) for RIS links, -30 - 40*log10(d) direct.
double pathloss_db(double distance_m, LinkKind kind);

// Planar-array response; q runs column-major over a Q1 x Q2 grid with
// i1(q) = (q-1) mod Q1 and i2(q) = floor((q-1)/Q2), 1-based q.
CVec steering_vector(double azimuth, double elevation, int Q1, int Q2,
                     double d1_m, double d2_m, double wavelength_m);

struct ChannelRealization {
  int K = 0, Q = 0;
  CMat h_d;      // K x K, entry (k, j) = direct link Tx j -> Rx k
  CMat H_t;      // Q x K forward (Tx -> RIS)
  CMat H_r;      // Q x K backward (RIS -> Rx)
  CMat H_b_stack;             // Q x K(K-1), cross pairs only
  CVec h_d_stack;             // K(K-1)
  std::vector<std::pair<int, int>> pairs;  // (k, j) per stacked column, 0-based

  // Cascaded vector for the ordered pair (k, j): conj(H_t[:,j]) .* conj(H_r[:,k]),
  // so that h_b(k,j)^H a == h_r[:,k]^T diag(a) h_t[:,j].
  CVec h_b(int k, int j) const;
};

// Fills H_b_stack / h_d_stack / pairs from h_d, H_t, H_r. Column order:
// j = 0..K-1 outer, k != j inner ascending.
void populate_cascade(ChannelRealization& ch);

// Restriction to the first q reflecting elements (direct links unchanged).
ChannelRealization slice_res(const ChannelRealization& ch, int q);

// Geometry-driven draw: uniform user positions, Rician RIS links, Rayleigh
// direct links. Deterministic for a fixed rng state.
ChannelRealization sample_channels(const ScenarioConfig& cfg, std::mt19937_64& rng);

// All-Rayleigh setup: RIS-link entries CN(0,1), direct entries CN(0, g) with
// g = 10^(gain_ratio_db/10), so E|h_d|^2 / (E|h_t_q|^2 E|h_r_q|^2) matches the ratio.
ChannelRealization sample_iid_setup(int Q, int K, double gain_ratio_db,
                                    std::mt19937_64& rng);

}  // namespace risbf
