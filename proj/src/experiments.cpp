#include "risbf/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include "risbf/nulling.hpp"
#include "risbf/powermin.hpp"
#include "risbf/sumrate.hpp"
#include "risbf/system_model.hpp"

namespace risbf {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------- sha1

std::uint32_t rotl(std::uint32_t x, int s) { return (x << s) | (x >> (32 - s)); }

std::string sha1_hex(const std::string& msg) {
  std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u,
                        0xC3D2E1F0u};
  std::string m = msg;
  const std::uint64_t bits = static_cast<std::uint64_t>(m.size()) * 8;
  m.push_back(static_cast<char>(0x80));
  while (m.size() % 64 != 56) m.push_back('\0');
  for (int i = 7; i >= 0; --i)
    m.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));

  for (size_t off = 0; off < m.size(); off += 64) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
      w[i] = 0;
      for (int b = 0; b < 4; ++b)
        w[i] = (w[i] << 8) | static_cast<unsigned char>(m[off + 4 * i + b]);
    }
    for (int i = 16; i < 80; ++i)
      w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

    std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
    for (int i = 0; i < 80; ++i) {
      std::uint32_t f, k;
      if (i < 20) {
        f = (b & c) | (~b & d);
        k = 0x5A827999u;
      } else if (i < 40) {
        f = b ^ c ^ d;
        k = 0x6ED9EBA1u;
      } else if (i < 60) {
        f = (b & c) | (b & d) | (c & d);
        k = 0x8F1BBCDCu;
      } else {
        f = b ^ c ^ d;
        k = 0xCA62C1D6u;
      }
      const std::uint32_t t = rotl(a, 5) + f + e + k + w[i];
      e = d;
      d = c;
      c = rotl(b, 30);
      b = a;
      a = t;
    }
    h[0] += a;
    h[1] += b;
    h[2] += c;
    h[3] += d;
    h[4] += e;
  }

  std::string hex;
  hex.reserve(40);
  for (std::uint32_t v : h)
    for (int i = 28; i >= 0; i -= 4) hex.push_back("0123456789abcdef"[(v >> i) & 0xf]);
  return hex;
}

// ---------------------------------------------------------------- spec parsing

struct Token {
  std::string text;
  int col = 1;  // 1-based column in the source line
};

std::string strip_comment(const std::string& line) {
  const size_t hash = line.find('#');
  return hash == std::string::npos ? line : line.substr(0, hash);
}

Token trimmed(const std::string& s, int base_col) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {"", base_col + static_cast<int>(s.size())};
  size_t e = s.find_last_not_of(" \t\r");
  return {s.substr(b, e - b + 1), base_col + static_cast<int>(b)};
}

std::vector<Token> split_list(const Token& value, int line) {
  std::vector<Token> items;
  size_t pos = 0;
  while (true) {
    const size_t comma = value.text.find(',', pos);
    const size_t len = comma == std::string::npos ? std::string::npos : comma - pos;
    Token item = trimmed(value.text.substr(pos, len), value.col + static_cast<int>(pos));
    if (item.text.empty()) throw SpecParseError(line, item.col, "empty list item");
    items.push_back(std::move(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return items;
}

double parse_double_tok(const Token& t, int line) {
  double v = 0;
  const char* end = t.text.data() + t.text.size();
  auto [p, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw SpecParseError(line, t.col, "expected a number, got '" + t.text + "'");
  return v;
}

long long parse_int_tok(const Token& t, int line) {
  long long v = 0;
  const char* end = t.text.data() + t.text.size();
  auto [p, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || p != end)
    throw SpecParseError(line, t.col, "expected an integer, got '" + t.text + "'");
  return v;
}

std::vector<double> parse_double_list(const Token& value, int line) {
  std::vector<double> out;
  for (const Token& t : split_list(value, line)) out.push_back(parse_double_tok(t, line));
  return out;
}

RVec rect_or_vec(const Token& value, int line, Rect* rect) {
  const std::vector<double> v = parse_double_list(value, line);
  if (rect) {
    if (v.size() != 4)
      throw SpecParseError(line, value.col, "expected 4 numbers: x0, x1, y0, y1");
    *rect = {v[0], v[1], v[2], v[3]};
    return {};
  }
  return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

const std::vector<std::string>& all_scheme_names() {
  static const std::vector<std::string> names = {
      "one_loop", "two_loop",     "srb",    "fixed_active",
      "passive_upper", "fully_active", "passive"};
  return names;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& x : v)
    if (x == s) return true;
  return false;
}

std::vector<std::string> allowed_schemes(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::nulling_prob: return {};
    case ExperimentKind::sumrate_convergence: return {"one_loop", "two_loop"};
    case ExperimentKind::sumrate_vs_pk:
    case ExperimentKind::sumrate_vs_budget:
      return {"one_loop", "two_loop", "srb", "fixed_active", "passive_upper"};
    case ExperimentKind::powermin_success: return {"srb", "fully_active", "passive"};
    case ExperimentKind::powermin_power: return {"srb", "fully_active", "passive"};
  }
  return {};
}

std::vector<std::string> default_schemes(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::nulling_prob: return {};
    case ExperimentKind::sumrate_convergence: return {"one_loop", "two_loop"};
    case ExperimentKind::sumrate_vs_pk:
    case ExperimentKind::sumrate_vs_budget:
      return {"one_loop", "srb", "fixed_active", "passive_upper"};
    case ExperimentKind::powermin_success: return {"srb", "fully_active", "passive"};
    case ExperimentKind::powermin_power: return {"srb", "fully_active"};
  }
  return {};
}

// ---------------------------------------------------------------- formatting

std::string csv_cell(double v) { return format_double(v); }
std::string csv_cell(int v) { return std::to_string(v); }

template <typename... Ts>
std::string csv_row(const Ts&... cells) {
  std::string row;
  int i = 0;
  auto append = [&](const std::string& c) {
    if (i++ > 0) row += ',';
    row += c;
  };
  (append(cells), ...);
  row += '\n';
  return row;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------- config echo

nlohmann::json scenario_json(const ScenarioConfig& c) {
  auto vec = [](const RVec& v) {
    std::vector<double> out(v.size());
    for (int i = 0; i < v.size(); ++i) out[static_cast<size_t>(i)] = v(i);
    return out;
  };
  nlohmann::json j;
  j["k"] = c.K;
  j["q1"] = c.Q1;
  j["q2"] = c.Q2;
  j["tx_area"] = {c.tx_area.x0, c.tx_area.x1, c.tx_area.y0, c.tx_area.y1};
  j["rx_area"] = {c.rx_area.x0, c.rx_area.x1, c.rx_area.y0, c.rx_area.y1};
  j["user_z"] = c.user_z;
  j["ris_origin"] = {c.ris_origin.x(), c.ris_origin.y(), c.ris_origin.z()};
  j["wavelength_m"] = c.wavelength_m;
  j["d1_m"] = c.d1_m;
  j["d2_m"] = c.d2_m;
  j["rician_kappa"] = c.rician_kappa;
  j["pl_ris_intercept_db"] = c.pl_ris_intercept_db;
  j["pl_ris_slope"] = c.pl_ris_slope;
  j["pl_dir_intercept_db"] = c.pl_dir_intercept_db;
  j["pl_dir_slope"] = c.pl_dir_slope;
  j["sigma_r_sq_dbm"] = c.sigma_r_sq_dbm;
  j["sigma_s_sq_dbm"] = c.sigma_s_sq_dbm;
  j["p_k_dbm"] = vec(c.p_k_dbm);
  j["alpha_max_sq_db"] = c.alpha_max_sq_db;
  j["p_bias_dbm"] = c.p_bias_dbm;
  j["p_dc_dbm"] = c.p_dc_dbm;
  j["xi"] = c.xi;
  j["p_ris_budget_dbm"] = c.p_ris_budget_dbm;
  j["rate_req_bps_hz"] = vec(c.rate_req_bps_hz);
  return j;
}

nlohmann::json tolerances_json(const Tolerances& t) {
  nlohmann::json j;
  j["tau_reweight"] = t.tau_reweight;
  j["fp_rel_tol"] = t.fp_rel_tol;
  j["fp_consecutive"] = t.fp_consecutive;
  j["fp_max_iters"] = t.fp_max_iters;
  j["dca_rho"] = t.dca_rho;
  j["dca_penalty_tol"] = t.dca_penalty_tol;
  j["dca_max_iters"] = t.dca_max_iters;
  j["zero_set_amp_threshold"] = t.zero_set_amp_threshold;
  j["rank_tol"] = t.rank_tol;
  j["feas_tol"] = t.feas_tol;
  j["gap_tol"] = t.gap_tol;
  j["powermin_rel_tol"] = t.powermin_rel_tol;
  j["powermin_max_outer"] = t.powermin_max_outer;
  return j;
}

nlohmann::json config_echo(const ExperimentSpec& spec,
                           const std::vector<std::string>& schemes) {
  nlohmann::json j;
  j["experiment"] = to_string(spec.experiment);
  j["trials"] = spec.trials;
  j["seed"] = spec.base.seed;
  j["schemes"] = schemes;
  nlohmann::json sweep;
  sweep["q"] = spec.q_list;
  sweep["alpha_max_sq_db"] = spec.alpha_max_sq_db_list;
  sweep["p_k_dbm"] = spec.p_k_dbm_list;
  sweep["p_ris_budget_dbm"] = spec.p_ris_budget_dbm_list;
  sweep["rate_req_bps_hz"] = spec.rate_req_list;
  j["sweep"] = sweep;
  j["scenario"] = scenario_json(spec.base);
  j["tolerances"] = tolerances_json(spec.base.tol);
  return j;
}

// ---------------------------------------------------------------- scheme rows

int nnz_of(const CVec& a) {
  int n = 0;
  for (int q = 0; q < a.size(); ++q)
    if (std::abs(a(q)) > 0.0) ++n;
  return n;
}

struct SumrateRow {
  std::string status = "numerical_failure";
  double sum_rate = kNan;
  int active_res = 0;
  double power_w = kNan;
};

SumrateRow sumrate_scheme_row(const std::string& scheme, const ChannelRealization& ch,
                              const ScenarioConfig& cfg,
                              std::optional<SolveReport>& fp_cache) {
  auto from_report = [](const SolveReport& rep) {
    SumrateRow r;
    r.status = to_string(rep.status);
    if (rep.feasible) {
      r.sum_rate = rep.objective;
      r.active_res = rep.active_res;
      r.power_w = rep.power_w;
    }
    return r;
  };
  auto fp = [&]() -> const SolveReport& {
    if (!fp_cache) fp_cache = sumrate_one_loop(ch, cfg, sumrate_init(ch, cfg));
    return *fp_cache;
  };

  if (scheme == "one_loop") return from_report(fp());
  if (scheme == "two_loop")
    return from_report(sumrate_two_loop(ch, cfg, sumrate_init(ch, cfg)));
  if (scheme == "srb") {
    // one-loop solution with sub-threshold entries switched off; rate and
    // power re-evaluated at the pruned vector
    const SolveReport& rep = fp();
    const LinearUnits u = linear_units(cfg);
    const CVec z = zero_setting(rep.a, cfg.tol.zero_set_amp_threshold);
    const SinrDecomposition dec = sinr_decomposition(ch, u.p_w, u.sigma_r2, u.sigma_s2);
    const RVec s = sinr_values(dec, u.p_w, z);
    SumrateRow r;
    r.status = to_string(rep.status);
    r.sum_rate = (s.array() + 1.0).log().sum() / std::log(2.0);
    r.power_w = power_consumption(
        z, ch.H_t, u.p_w, u.sigma_r2,
        {PowerModelKind::ActiveSparse, u.p_bias_w, u.p_dc_w, u.xi});
    r.active_res = nnz_of(z);
    return r;
  }
  if (scheme == "fixed_active")
    return from_report(sumrate_baseline(ch, cfg, SumrateBaseline::fixed_active));
  if (scheme == "passive_upper")
    return from_report(sumrate_baseline(ch, cfg, SumrateBaseline::passive_upper));
  throw std::invalid_argument("unknown sum-rate scheme: " + scheme);
}

struct PowerminRow {
  std::string status = "numerical_failure";
  bool feasible = false;
  double power_w = kNan;
  int active_res = 0;
  int dca_iters = 0;
  int outer_iters = 0;
};

PowerminRow powermin_scheme_row(const std::string& scheme, const ChannelRealization& ch,
                                const ScenarioConfig& cfg) {
  SolveReport rep;
  if (scheme == "srb")
    rep = powermin_sparse(ch, cfg);
  else if (scheme == "fully_active")
    rep = powermin_baseline(ch, cfg, PowerminBaseline::fully_active);
  else if (scheme == "passive")
    rep = powermin_baseline(ch, cfg, PowerminBaseline::passive_feasibility);
  else
    throw std::invalid_argument("unknown power-min scheme: " + scheme);

  PowerminRow r;
  r.status = to_string(rep.status);
  r.feasible = rep.feasible;
  if (rep.feasible) {
    r.power_w = rep.power_w;
    r.active_res = rep.active_res;
  }
  r.dca_iters = rep.inner_iters;
  r.outer_iters = rep.iterations;
  return r;
}

// ---------------------------------------------------------------- runners

using FileList = std::vector<std::pair<std::string, std::string>>;  // name, content

FileList build_nulling(const ExperimentSpec& spec, const std::string& cfg_line,
                       const std::string& out_name) {
  const NullingTable tab = nulling_success_probability(
      spec.q_list, spec.alpha_max_sq_db_list, spec.trials, spec.base.seed, spec.base.K);

  std::string per_trial = cfg_line + "q,alpha_max_sq_db,trial,residual_power,success\n";
  for (const NullingTrialRecord& rec : tab.records)
    per_trial += csv_row(csv_cell(rec.q), csv_cell(rec.alpha_max_sq_db),
                         csv_cell(rec.trial), csv_cell(rec.residual_power),
                         std::string(rec.success ? "1" : "0"));

  std::string agg = cfg_line + "q,alpha_max_sq_db,success_prob,trials\n";
  for (const NullingCell& cell : tab.cells)
    agg += csv_row(csv_cell(cell.q), csv_cell(cell.alpha_max_sq_db),
                   csv_cell(cell.success_prob), csv_cell(cell.trials));

  const std::filesystem::path p(out_name);
  const std::string agg_name =
      (p.parent_path() / (p.stem().string() + "_agg.csv")).string();
  return {{out_name, std::move(per_trial)}, {agg_name, std::move(agg)}};
}

FileList build_convergence(const ExperimentSpec& spec,
                           const std::vector<std::string>& schemes,
                           const std::string& cfg_line, const std::string& out_name,
                           int workers) {
  std::vector<std::string> slots(static_cast<size_t>(spec.trials));
  parallel_for(spec.trials, workers, [&](int t) {
    const std::uint64_t seed = spec.base.seed;
    std::mt19937_64 rng = make_rng(seed, static_cast<std::uint64_t>(t));
    const ChannelRealization ch = sample_channels(spec.base, rng);
    std::string& out = slots[static_cast<size_t>(t)];
    for (const std::string& scheme : schemes) {
      try {
        const SolveReport rep =
            scheme == "one_loop"
                ? sumrate_one_loop(ch, spec.base, sumrate_init(ch, spec.base))
                : sumrate_two_loop(ch, spec.base, sumrate_init(ch, spec.base));
        for (size_t i = 0; i < rep.trajectory.size(); ++i)
          out += csv_row(csv_cell(static_cast<int>(i)), csv_cell(t), scheme,
                         csv_cell(rep.trajectory[i]),
                         std::string(to_string(rep.status)));
      } catch (const std::exception&) {
        out += csv_row(csv_cell(0), csv_cell(t), scheme, csv_cell(kNan),
                       std::string("numerical_failure"));
      }
    }
  });

  std::string content = cfg_line + "iteration,trial,scheme,sum_rate,status\n";
  for (const std::string& s : slots) content += s;
  return {{out_name, std::move(content)}};
}

FileList build_sumrate_sweep(const ExperimentSpec& spec,
                             const std::vector<std::string>& schemes,
                             const std::string& cfg_line, const std::string& out_name,
                             int workers, bool budget_axis) {
  const std::vector<double>& values =
      budget_axis ? spec.p_ris_budget_dbm_list : spec.p_k_dbm_list;
  const char* sweep_col = budget_axis ? "p_ris_budget_dbm" : "p_k_dbm";
  const int n = static_cast<int>(values.size()) * spec.trials;

  std::vector<std::string> slots(static_cast<size_t>(n));
  parallel_for(n, workers, [&](int i) {
    const int s = i / spec.trials;
    const int t = i % spec.trials;
    ScenarioConfig cfg = spec.base;
    if (budget_axis)
      cfg.p_ris_budget_dbm = values[static_cast<size_t>(s)];
    else
      cfg.p_k_dbm = RVec::Constant(cfg.K, values[static_cast<size_t>(s)]);
    // the draw ignores powers and budgets, so trials pair across sweep values
    std::mt19937_64 rng = make_rng(spec.base.seed, static_cast<std::uint64_t>(t));
    const ChannelRealization ch = sample_channels(cfg, rng);

    std::optional<SolveReport> fp_cache;
    std::string& out = slots[static_cast<size_t>(i)];
    for (const std::string& scheme : schemes) {
      SumrateRow row;
      try {
        row = sumrate_scheme_row(scheme, ch, cfg, fp_cache);
      } catch (const std::exception&) {
        row = SumrateRow{};
      }
      out += csv_row(csv_cell(values[static_cast<size_t>(s)]), csv_cell(t), scheme,
                     row.status, csv_cell(row.sum_rate), csv_cell(row.active_res),
                     csv_cell(row.power_w));
    }
  });

  std::string content =
      cfg_line + sweep_col + ",trial,scheme,status,sum_rate,active_res,power_w\n";
  for (const std::string& s : slots) content += s;
  return {{out_name, std::move(content)}};
}

FileList build_powermin(const ExperimentSpec& spec,
                        const std::vector<std::string>& schemes,
                        const std::string& cfg_line, const std::string& out_name,
                        int workers) {
  const std::vector<double>& values = spec.rate_req_list;
  const int n = static_cast<int>(values.size()) * spec.trials;

  std::vector<std::string> slots(static_cast<size_t>(n));
  parallel_for(n, workers, [&](int i) {
    const int s = i / spec.trials;
    const int t = i % spec.trials;
    ScenarioConfig cfg = spec.base;
    cfg.rate_req_bps_hz = RVec::Constant(cfg.K, values[static_cast<size_t>(s)]);
    std::mt19937_64 rng = make_rng(spec.base.seed, static_cast<std::uint64_t>(t));
    const ChannelRealization ch = sample_channels(cfg, rng);

    std::string& out = slots[static_cast<size_t>(i)];
    for (const std::string& scheme : schemes) {
      PowerminRow row;
      try {
        row = powermin_scheme_row(scheme, ch, cfg);
      } catch (const std::exception&) {
        row = PowerminRow{};
      }
      out += csv_row(csv_cell(values[static_cast<size_t>(s)]), csv_cell(t), scheme,
                     row.status, std::string(row.feasible ? "1" : "0"),
                     csv_cell(row.power_w), csv_cell(row.active_res),
                     csv_cell(row.dca_iters), csv_cell(row.outer_iters));
    }
  });

  std::string content = cfg_line +
                        "rate_req_bps_hz,trial,scheme,status,feasible,power_w,"
                        "active_res,dca_iters,outer_iters\n";
  for (const std::string& s : slots) content += s;
  return {{out_name, std::move(content)}};
}

// ---------------------------------------------------------------- summarize

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  size_t pos = 0;
  while (true) {
    const size_t comma = line.find(',', pos);
    std::string cell =
        line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(std::move(cell));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return cells;
}

int find_col(const std::vector<std::string>& header, const std::string& name) {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

struct MetricStats {
  int n = 0;
  double mean = kNan;
  double stderr_ = 0.0;
};

MetricStats stats_of(const std::vector<double>& xs) {
  MetricStats st;
  double sum = 0;
  for (double x : xs)
    if (!std::isnan(x)) {
      ++st.n;
      sum += x;
    }
  if (st.n == 0) return st;
  st.mean = sum / st.n;
  if (st.n > 1) {
    double ss = 0;
    for (double x : xs)
      if (!std::isnan(x)) ss += (x - st.mean) * (x - st.mean);
    st.stderr_ = std::sqrt(ss / (st.n - 1)) / std::sqrt(static_cast<double>(st.n));
  }
  return st;
}

}  // namespace

// ---------------------------------------------------------------- public api

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::nulling_prob: return "nulling_prob";
    case ExperimentKind::sumrate_convergence: return "sumrate_convergence";
    case ExperimentKind::sumrate_vs_pk: return "sumrate_vs_pk";
    case ExperimentKind::sumrate_vs_budget: return "sumrate_vs_budget";
    case ExperimentKind::powermin_success: return "powermin_success";
    case ExperimentKind::powermin_power: return "powermin_power";
  }
  return "nulling_prob";
}

ExperimentKind experiment_kind_from(const std::string& name) {
  for (ExperimentKind k :
       {ExperimentKind::nulling_prob, ExperimentKind::sumrate_convergence,
        ExperimentKind::sumrate_vs_pk, ExperimentKind::sumrate_vs_budget,
        ExperimentKind::powermin_success, ExperimentKind::powermin_power})
    if (name == to_string(k)) return k;
  throw std::invalid_argument("unknown experiment: " + name);
}

std::string sha1_git_blob(const std::string& content) {
  return sha1_hex("blob " + std::to_string(content.size()) + '\0' + content);
}

std::string format_double(double v) {
  std::array<char, 64> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

ExperimentSpec parse_spec(const std::string& text) {
  enum class Section { none, experiment, scenario, sweep, tolerances };
  ExperimentSpec spec;
  Section section = Section::none;
  bool kind_set = false;
  struct Pending {
    std::vector<double> v;
    int line = 0, col = 0;
    bool set = false;
  } pk, rr;
  int schemes_line = 0, schemes_col = 0;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const Token line = trimmed(strip_comment(raw), 1);
    if (line.text.empty()) continue;

    if (line.text.front() == '[') {
      if (line.text.back() != ']')
        throw SpecParseError(lineno, line.col, "unterminated section header");
      const std::string name = line.text.substr(1, line.text.size() - 2);
      if (name == "experiment")
        section = Section::experiment;
      else if (name == "scenario")
        section = Section::scenario;
      else if (name == "sweep")
        section = Section::sweep;
      else if (name == "tolerances")
        section = Section::tolerances;
      else
        throw SpecParseError(lineno, line.col + 1, "unknown section [" + name + "]");
      continue;
    }

    const std::string stripped = strip_comment(raw);
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw SpecParseError(lineno, line.col, "expected key = value");
    const Token key = trimmed(stripped.substr(0, eq), 1);
    const Token value = trimmed(stripped.substr(eq + 1), static_cast<int>(eq) + 2);
    if (key.text.empty()) throw SpecParseError(lineno, line.col, "missing key");
    if (value.text.empty())
      throw SpecParseError(lineno, static_cast<int>(eq) + 2, "missing value");
    auto bad_key = [&]() -> SpecParseError {
      return {lineno, key.col, "unknown key: " + key.text};
    };

    switch (section) {
      case Section::none:
        throw SpecParseError(lineno, line.col, "key outside of any section");
      case Section::experiment: {
        if (key.text == "kind") {
          try {
            spec.experiment = experiment_kind_from(value.text);
          } catch (const std::invalid_argument& e) {
            throw SpecParseError(lineno, value.col, e.what());
          }
          kind_set = true;
        } else if (key.text == "trials") {
          const long long t = parse_int_tok(value, lineno);
          if (t < 1) throw SpecParseError(lineno, value.col, "trials: must be >= 1");
          spec.trials = static_cast<int>(t);
        } else if (key.text == "seed") {
          std::uint64_t s = 0;
          const char* end = value.text.data() + value.text.size();
          auto [p, ec] = std::from_chars(value.text.data(), end, s);
          if (ec != std::errc() || p != end)
            throw SpecParseError(lineno, value.col,
                                 "expected an integer, got '" + value.text + "'");
          spec.base.seed = s;
        } else if (key.text == "schemes") {
          spec.schemes.clear();
          for (const Token& t : split_list(value, lineno)) {
            if (!contains(all_scheme_names(), t.text))
              throw SpecParseError(lineno, t.col, "unknown scheme: " + t.text);
            spec.schemes.push_back(t.text);
          }
          schemes_line = lineno;
          schemes_col = value.col;
        } else if (key.text == "out_csv") {
          spec.out_csv = value.text;
        } else {
          throw bad_key();
        }
        break;
      }
      case Section::scenario: {
        ScenarioConfig& c = spec.base;
        auto num = [&]() { return parse_double_tok(value, lineno); };
        if (key.text == "k") {
          const long long k = parse_int_tok(value, lineno);
          if (k < 2) throw SpecParseError(lineno, value.col, "k: must be >= 2");
          c.K = static_cast<int>(k);
        } else if (key.text == "q1" || key.text == "q2") {
          const long long q = parse_int_tok(value, lineno);
          if (q < 1)
            throw SpecParseError(lineno, value.col, key.text + ": must be >= 1");
          (key.text == "q1" ? c.Q1 : c.Q2) = static_cast<int>(q);
        } else if (key.text == "tx_area") {
          rect_or_vec(value, lineno, &c.tx_area);
        } else if (key.text == "rx_area") {
          rect_or_vec(value, lineno, &c.rx_area);
        } else if (key.text == "ris_origin") {
          const std::vector<double> v = parse_double_list(value, lineno);
          if (v.size() != 3)
            throw SpecParseError(lineno, value.col, "expected 3 numbers: x, y, z");
          c.ris_origin = {v[0], v[1], v[2]};
        } else if (key.text == "user_z") {
          c.user_z = num();
        } else if (key.text == "wavelength_m") {
          c.wavelength_m = num();
        } else if (key.text == "d1_m") {
          c.d1_m = num();
        } else if (key.text == "d2_m") {
          c.d2_m = num();
        } else if (key.text == "rician_kappa") {
          c.rician_kappa = num();
        } else if (key.text == "pl_ris_intercept_db") {
          c.pl_ris_intercept_db = num();
        } else if (key.text == "pl_ris_slope") {
          c.pl_ris_slope = num();
        } else if (key.text == "pl_dir_intercept_db") {
          c.pl_dir_intercept_db = num();
        } else if (key.text == "pl_dir_slope") {
          c.pl_dir_slope = num();
        } else if (key.text == "sigma_r_sq_dbm") {
          c.sigma_r_sq_dbm = num();
        } else if (key.text == "sigma_s_sq_dbm") {
          c.sigma_s_sq_dbm = num();
        } else if (key.text == "p_k_dbm") {
          pk = {parse_double_list(value, lineno), lineno, value.col, true};
        } else if (key.text == "alpha_max_sq_db") {
          c.alpha_max_sq_db = num();
        } else if (key.text == "p_bias_dbm") {
          c.p_bias_dbm = num();
        } else if (key.text == "p_dc_dbm") {
          c.p_dc_dbm = num();
        } else if (key.text == "xi") {
          c.xi = num();
        } else if (key.text == "p_ris_budget_dbm") {
          c.p_ris_budget_dbm = num();
        } else if (key.text == "rate_req_bps_hz") {
          rr = {parse_double_list(value, lineno), lineno, value.col, true};
        } else {
          throw bad_key();
        }
        break;
      }
      case Section::sweep: {
        if (key.text == "q") {
          spec.q_list.clear();
          for (const Token& t : split_list(value, lineno)) {
            const long long q = parse_int_tok(t, lineno);
            if (q < 1) throw SpecParseError(lineno, t.col, "q: must be >= 1");
            spec.q_list.push_back(static_cast<int>(q));
          }
        } else if (key.text == "alpha_max_sq_db") {
          spec.alpha_max_sq_db_list = parse_double_list(value, lineno);
        } else if (key.text == "p_k_dbm") {
          spec.p_k_dbm_list = parse_double_list(value, lineno);
        } else if (key.text == "p_ris_budget_dbm") {
          spec.p_ris_budget_dbm_list = parse_double_list(value, lineno);
        } else if (key.text == "rate_req_bps_hz") {
          spec.rate_req_list = parse_double_list(value, lineno);
        } else {
          throw bad_key();
        }
        break;
      }
      case Section::tolerances: {
        Tolerances& t = spec.base.tol;
        auto num = [&]() { return parse_double_tok(value, lineno); };
        auto count = [&]() {
          const long long n = parse_int_tok(value, lineno);
          if (n < 1)
            throw SpecParseError(lineno, value.col, key.text + ": must be >= 1");
          return static_cast<int>(n);
        };
        if (key.text == "tau_reweight") t.tau_reweight = num();
        else if (key.text == "fp_rel_tol") t.fp_rel_tol = num();
        else if (key.text == "fp_consecutive") t.fp_consecutive = count();
        else if (key.text == "fp_max_iters") t.fp_max_iters = count();
        else if (key.text == "dca_rho") t.dca_rho = num();
        else if (key.text == "dca_penalty_tol") t.dca_penalty_tol = num();
        else if (key.text == "dca_max_iters") t.dca_max_iters = count();
        else if (key.text == "zero_set_amp_threshold") t.zero_set_amp_threshold = num();
        else if (key.text == "rank_tol") t.rank_tol = num();
        else if (key.text == "feas_tol") t.feas_tol = num();
        else if (key.text == "gap_tol") t.gap_tol = num();
        else if (key.text == "powermin_rel_tol") t.powermin_rel_tol = num();
        else if (key.text == "powermin_max_outer") t.powermin_max_outer = count();
        else throw bad_key();
        break;
      }
    }
  }

  if (!kind_set) throw SpecParseError(1, 1, "missing key: [experiment] kind");

  auto broadcast = [&](const Pending& p, RVec& dst, const char* name) {
    if (!p.set) {
      if (dst.size() != spec.base.K)
        dst = RVec::Constant(spec.base.K, dst.size() > 0 ? dst(0) : 0.0);
      return;
    }
    if (p.v.size() == 1)
      dst = RVec::Constant(spec.base.K, p.v[0]);
    else if (static_cast<int>(p.v.size()) == spec.base.K)
      dst = Eigen::Map<const RVec>(p.v.data(), spec.base.K);
    else
      throw SpecParseError(p.line, p.col,
                           std::string(name) + ": size must be k or 1");
  };
  broadcast(pk, spec.base.p_k_dbm, "p_k_dbm");
  broadcast(rr, spec.base.rate_req_bps_hz, "rate_req_bps_hz");

  auto require_axis = [&](bool ok, const char* axis) {
    if (!ok)
      throw SpecParseError(1, 1,
                           std::string("sweep ") + axis + ": required for " +
                               to_string(spec.experiment));
  };
  switch (spec.experiment) {
    case ExperimentKind::nulling_prob:
      require_axis(!spec.q_list.empty(), "q");
      require_axis(!spec.alpha_max_sq_db_list.empty(), "alpha_max_sq_db");
      break;
    case ExperimentKind::sumrate_convergence: break;
    case ExperimentKind::sumrate_vs_pk:
      require_axis(!spec.p_k_dbm_list.empty(), "p_k_dbm");
      break;
    case ExperimentKind::sumrate_vs_budget:
      require_axis(!spec.p_ris_budget_dbm_list.empty(), "p_ris_budget_dbm");
      break;
    case ExperimentKind::powermin_success:
    case ExperimentKind::powermin_power:
      require_axis(!spec.rate_req_list.empty(), "rate_req_bps_hz");
      break;
  }

  const std::vector<std::string> allowed = allowed_schemes(spec.experiment);
  for (const std::string& s : spec.schemes)
    if (!contains(allowed, s))
      throw SpecParseError(schemes_line, schemes_col,
                           "scheme " + s + " not available for " +
                               to_string(spec.experiment));

  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

std::vector<std::string> resolved_schemes(const ExperimentSpec& spec) {
  return spec.schemes.empty() ? default_schemes(spec.experiment) : spec.schemes;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  const int w = std::max(1, std::min(workers, n));
  if (w == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(w));
  for (int t = 0; t < w; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
    });
  for (std::thread& th : pool) th.join();
}

RunResult run_experiment(const ExperimentSpec& spec, const std::string& spec_text,
                         const std::string& out_dir, int workers) {
  if (spec.trials < 1) throw std::invalid_argument("trials: must be >= 1");
  const std::vector<std::string> schemes = resolved_schemes(spec);
  const nlohmann::json echo = config_echo(spec, schemes);
  const std::string cfg_line = "# config: " + echo.dump() + "\n";
  const std::string out_name = spec.out_csv.empty()
                                   ? std::string(to_string(spec.experiment)) + ".csv"
                                   : spec.out_csv;

  FileList files;
  switch (spec.experiment) {
    case ExperimentKind::nulling_prob:
      files = build_nulling(spec, cfg_line, out_name);
      break;
    case ExperimentKind::sumrate_convergence:
      files = build_convergence(spec, schemes, cfg_line, out_name, workers);
      break;
    case ExperimentKind::sumrate_vs_pk:
      files = build_sumrate_sweep(spec, schemes, cfg_line, out_name, workers, false);
      break;
    case ExperimentKind::sumrate_vs_budget:
      files = build_sumrate_sweep(spec, schemes, cfg_line, out_name, workers, true);
      break;
    case ExperimentKind::powermin_success:
    case ExperimentKind::powermin_power:
      files = build_powermin(spec, schemes, cfg_line, out_name, workers);
      break;
  }

  const std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);

  RunResult res;
  nlohmann::json outputs = nlohmann::json::array();
  for (const auto& [name, content] : files) {
    const std::filesystem::path path = dir / name;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_text(path, content);
    res.csv_paths.push_back(path.string());
    outputs.push_back({{"path", name}, {"sha1", sha1_git_blob(content)}});
  }

  nlohmann::json manifest;
  manifest["experiment"] = to_string(spec.experiment);
  manifest["config"] = echo;
  manifest["spec_sha1"] = sha1_git_blob(spec_text);
  manifest["outputs"] = outputs;
  manifest["scale_note"] =
      "desk scale: reduced trial counts and array sizes, axes unchanged";
  const std::filesystem::path p(out_name);
  const std::filesystem::path mpath =
      dir / p.parent_path() / (p.stem().string() + "_manifest.json");
  write_text(mpath, manifest.dump(2) + "\n");
  res.manifest_path = mpath.string();
  return res;
}

std::string summarize_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string raw;
  std::vector<std::string> header;
  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '#') continue;
    header = split_cells(raw);
    break;
  }
  if (header.empty()) throw std::runtime_error("schema mismatch: no header row");

  const int trial_ix = find_col(header, "trial");
  if (trial_ix < 0) throw std::runtime_error("schema mismatch: no trial column");
  const int scheme_ix = find_col(header, "scheme");
  const int status_ix = find_col(header, "status");

  std::vector<int> group_ixs, metric_ixs;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (i == trial_ix || i == scheme_ix || i == status_ix) continue;
    (i < trial_ix ? group_ixs : metric_ixs).push_back(i);
  }
  if (metric_ixs.empty()) throw std::runtime_error("schema mismatch: no metric columns");

  struct TrialRow {
    std::string trial;
    std::vector<double> values;
  };
  // scheme -> trial rows, per group; insertion order preserved everywhere
  std::vector<std::string> group_order;
  std::vector<std::string> scheme_order;
  std::map<std::string, std::map<std::string, std::vector<TrialRow>>> data;

  while (std::getline(in, raw)) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty() || raw[0] == '#') continue;
    const std::vector<std::string> cells = split_cells(raw);
    if (cells.size() != header.size())
      throw std::runtime_error("schema mismatch: row has " +
                               std::to_string(cells.size()) + " cells, header has " +
                               std::to_string(header.size()));
    std::string gkey;
    for (int ix : group_ixs) {
      if (!gkey.empty()) gkey += ',';
      gkey += cells[static_cast<size_t>(ix)];
    }
    const std::string scheme =
        scheme_ix >= 0 ? cells[static_cast<size_t>(scheme_ix)] : std::string();

    TrialRow row;
    row.trial = cells[static_cast<size_t>(trial_ix)];
    for (int ix : metric_ixs) {
      const std::string& cell = cells[static_cast<size_t>(ix)];
      double v = 0;
      const char* end = cell.data() + cell.size();
      auto [p, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc() || p != end)
        throw std::runtime_error("schema mismatch: non-numeric cell '" + cell +
                                 "' in column " + header[static_cast<size_t>(ix)]);
      row.values.push_back(v);
    }

    if (data.find(gkey) == data.end()) group_order.push_back(gkey);
    if (!contains(scheme_order, scheme)) scheme_order.push_back(scheme);
    data[gkey][scheme].push_back(std::move(row));
  }

  auto metric_name = [&](int which) {
    const std::string& col = header[static_cast<size_t>(metric_ixs[which])];
    return (col == "success" || col == "feasible") ? std::string("success_prob") : col;
  };

  std::string out;
  for (int ix : group_ixs) out += header[static_cast<size_t>(ix)] + ',';
  out += "scheme,metric,n,mean,stderr\n";

  const size_t nm = metric_ixs.size();
  for (const std::string& gkey : group_order) {
    const auto& by_scheme = data[gkey];
    const std::string prefix = group_ixs.empty() ? "" : gkey + ",";
    for (const std::string& scheme : scheme_order) {
      const auto it = by_scheme.find(scheme);
      if (it == by_scheme.end()) continue;
      for (size_t m = 0; m < nm; ++m) {
        std::vector<double> xs;
        for (const TrialRow& r : it->second) xs.push_back(r.values[m]);
        const MetricStats st = stats_of(xs);
        out += prefix + csv_row(scheme, metric_name(static_cast<int>(m)),
                                csv_cell(st.n), csv_cell(st.mean),
                                csv_cell(st.stderr_));
      }
    }
    if (scheme_order.size() == 2) {
      const auto a = by_scheme.find(scheme_order[0]);
      const auto b = by_scheme.find(scheme_order[1]);
      if (a == by_scheme.end() || b == by_scheme.end()) continue;
      std::map<std::string, const TrialRow*> b_rows;
      for (const TrialRow& r : b->second) b_rows[r.trial] = &r;
      for (size_t m = 0; m < nm; ++m) {
        std::vector<double> diffs;
        for (const TrialRow& r : a->second) {
          const auto match = b_rows.find(r.trial);
          if (match == b_rows.end()) continue;
          diffs.push_back(r.values[m] - match->second->values[m]);
        }
        if (diffs.empty()) continue;
        const MetricStats st = stats_of(diffs);
        out += prefix + csv_row(scheme_order[0] + "-" + scheme_order[1],
                                metric_name(static_cast<int>(m)), csv_cell(st.n),
                                csv_cell(st.mean), csv_cell(st.stderr_));
      }
    }
  }
  return out;
}

std::string spec_template(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::nulling_prob:
      return R"(# success probability of exact interference nulling per (q, alpha_max) cell
# i.i.d. channels at a 20 dB direct-to-cascaded gain ratio

[experiment]
kind = nulling_prob
trials = 200
seed = 1
out_csv = nulling_prob.csv

[scenario]
k = 4

[sweep]
q = 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20
alpha_max_sq_db = 0, 10, 20, 30
)";
    case ExperimentKind::sumrate_convergence:
      return R"(# per-iteration sum-rate trajectories of the one-loop and two-loop solvers

[experiment]
kind = sumrate_convergence
trials = 5
seed = 1
schemes = one_loop, two_loop
out_csv = sumrate_convergence.csv

[scenario]
k = 4
q1 = 8
q2 = 8
p_k_dbm = 23
alpha_max_sq_db = 20
p_ris_budget_dbm = 10
)";
    case ExperimentKind::sumrate_vs_pk:
      return R"(# sum rate against the per-user transmit power at a fixed array budget

[experiment]
kind = sumrate_vs_pk
trials = 100
seed = 1
schemes = one_loop, srb, fixed_active, passive_upper
out_csv = sumrate_vs_pk.csv

[scenario]
k = 4
q1 = 4
q2 = 4
alpha_max_sq_db = 30
p_ris_budget_dbm = 10

[sweep]
p_k_dbm = 15, 19, 23, 27, 31
)";
    case ExperimentKind::sumrate_vs_budget:
      return R"(# sum rate against the array power budget

[experiment]
kind = sumrate_vs_budget
trials = 100
seed = 1
schemes = one_loop, srb, fixed_active, passive_upper
out_csv = sumrate_vs_budget.csv

[scenario]
k = 4
q1 = 4
q2 = 4
p_k_dbm = 23
alpha_max_sq_db = 30

[sweep]
p_ris_budget_dbm = -10, -5, 0, 5, 10, 15
)";
    case ExperimentKind::powermin_success:
      return R"(# fraction of realizations whose rate targets are reachable, per scheme

[experiment]
kind = powermin_success
trials = 100
seed = 1
schemes = srb, fully_active, passive
out_csv = powermin_success.csv

[scenario]
k = 4
q1 = 8
q2 = 4
p_k_dbm = 23
alpha_max_sq_db = 10

[sweep]
rate_req_bps_hz = 0.3, 0.6, 0.9, 1.2, 1.5, 1.8
)";
    case ExperimentKind::powermin_power:
      return R"(# array power needed to meet the rate targets, per scheme

[experiment]
kind = powermin_power
trials = 100
seed = 1
schemes = srb, fully_active
out_csv = powermin_power.csv

[scenario]
k = 4
q1 = 8
q2 = 4
p_k_dbm = 23
alpha_max_sq_db = 10

[sweep]
rate_req_bps_hz = 0.2, 0.4, 0.6, 0.8, 1.0
)";
  }
  return "";
}

}  // namespace risbf
