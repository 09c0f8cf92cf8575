#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <charconv>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "doctest.h"
#include "risbf/experiments.hpp"
#include "risbf/sumrate.hpp"

using namespace risbf;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// non-comment lines; [0] is the column header
std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') lines.push_back(line);
  return lines;
}

std::vector<std::string> cells_of(const std::string& line) {
  std::vector<std::string> cells;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  return cells;
}

double to_double(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  REQUIRE(ec == std::errc());
  REQUIRE(p == s.data() + s.size());
  return v;
}

SpecParseError expect_parse_error(const std::string& text) {
  try {
    parse_spec(text);
  } catch (const SpecParseError& e) {
    return e;
  }
  throw std::runtime_error("expected a parse error");
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("risbf_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("git blob hashes match git") {
  // frozen from `git hash-object`
  CHECK(sha1_git_blob("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(sha1_git_blob("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(sha1_git_blob("q,alpha\n8,0\n") == "881285325ba031a6d59dad9ac991fa1b07092612");
}

TEST_CASE("format_double round-trips and stays short") {
  CHECK(format_double(0.6) == "0.6");
  CHECK(format_double(4.0) == "4");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(-1.5e-7) == "-1.5e-07");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");

  auto rng = make_rng(17, 0);
  std::uniform_real_distribution<double> mag(-30.0, 30.0), sign(-1.0, 1.0);
  for (int it = 0; it < 200; ++it) {
    const double x = std::copysign(std::pow(10.0, mag(rng)), sign(rng));
    CHECK(to_double(format_double(x)) == x);
  }
}

TEST_CASE("templates parse for every experiment") {
  for (ExperimentKind kind :
       {ExperimentKind::nulling_prob, ExperimentKind::sumrate_convergence,
        ExperimentKind::sumrate_vs_pk, ExperimentKind::sumrate_vs_budget,
        ExperimentKind::powermin_success, ExperimentKind::powermin_power}) {
    CAPTURE(to_string(kind));
    const ExperimentSpec spec = parse_spec(spec_template(kind));
    CHECK(spec.experiment == kind);
    CHECK(spec.trials >= 1);
    CHECK(!spec.out_csv.empty());
    CHECK(!resolved_schemes(spec).empty() == (kind != ExperimentKind::nulling_prob));
    CHECK(experiment_kind_from(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(experiment_kind_from("fig8"), std::invalid_argument);
}

TEST_CASE("spec fields land in the scenario") {
  const std::string text = R"([experiment]
kind = powermin_power
trials = 7
seed = 42
schemes = srb
out_csv = x.csv

[scenario]
k = 3
q1 = 5
q2 = 2
p_k_dbm = 20, 21, 22
rate_req_bps_hz = 0.5
sigma_r_sq_dbm = -95
xi = 2.5

[sweep]
rate_req_bps_hz = 0.2, 0.4

[tolerances]
gap_tol = 1e-8
powermin_max_outer = 7
)";
  const ExperimentSpec spec = parse_spec(text);
  CHECK(spec.trials == 7);
  CHECK(spec.base.seed == 42);
  CHECK(spec.base.K == 3);
  CHECK(spec.base.Q() == 10);
  REQUIRE(spec.base.p_k_dbm.size() == 3);
  CHECK(spec.base.p_k_dbm(1) == 21.0);
  REQUIRE(spec.base.rate_req_bps_hz.size() == 3);  // scalar broadcast to K
  CHECK(spec.base.rate_req_bps_hz(2) == 0.5);
  CHECK(spec.base.sigma_r_sq_dbm == -95.0);
  CHECK(spec.base.xi == 2.5);
  CHECK(spec.base.tol.gap_tol == 1e-8);
  CHECK(spec.base.tol.powermin_max_outer == 7);
  CHECK(spec.rate_req_list == std::vector<double>{0.2, 0.4});
  CHECK(resolved_schemes(spec) == std::vector<std::string>{"srb"});
}

TEST_CASE("parse errors carry line and column") {
  {
    const SpecParseError e = expect_parse_error("[scenario]\n  bogus = 1\n");
    CHECK(e.line == 2);
    CHECK(e.col == 3);
    CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
  }
  {
    const SpecParseError e = expect_parse_error("[sweep]\nq = 4, x, 6\n");
    CHECK(e.line == 2);
    CHECK(e.col == 8);
  }
  {
    const SpecParseError e = expect_parse_error("[frobnicate]\n");
    CHECK(e.line == 1);
    CHECK(e.col == 2);
  }
  {
    const SpecParseError e =
        expect_parse_error("[experiment]\nkind = nulling_prob\ntrials = 0\n");
    CHECK(e.line == 3);
    CHECK(e.col == 10);
    CHECK(std::string(e.what()).find(">= 1") != std::string::npos);
  }
  {
    // srb is a valid scheme name but not for this experiment
    const SpecParseError e = expect_parse_error(
        "[experiment]\nkind = sumrate_convergence\nschemes = srb\n");
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("not available") != std::string::npos);
  }
  {
    const SpecParseError e = expect_parse_error("[experiment]\ntrials = 3\n");
    CHECK(std::string(e.what()).find("kind") != std::string::npos);
  }
  {
    const SpecParseError e = expect_parse_error(
        "[experiment]\nkind = sumrate_convergence\n[scenario]\nk = 4\np_k_dbm = 1, 2\n");
    CHECK(e.line == 5);
    CHECK(e.col == 11);
    CHECK(std::string(e.what()).find("size must be k or 1") != std::string::npos);
  }
  {
    const SpecParseError e = expect_parse_error("x = 1\n");
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("section") != std::string::npos);
  }
  {
    const SpecParseError e = expect_parse_error("[experiment]\nkind = nulling_prob\n");
    CHECK(std::string(e.what()).find("sweep q") != std::string::npos);
  }
}

TEST_CASE("nulling run emits one aggregate row per sweep cell") {
  const std::string text = R"([experiment]
kind = nulling_prob
trials = 2
seed = 1

[scenario]
k = 4

[sweep]
q = 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20
alpha_max_sq_db = 0, 10, 20, 30
)";
  const ExperimentSpec spec = parse_spec(text);
  const fs::path dir = fresh_dir("nulling");
  const RunResult res = run_experiment(spec, text, dir.string(), 1);
  REQUIRE(res.csv_paths.size() == 2);

  const std::string per_trial = read_file(res.csv_paths[0]);
  const std::string agg = read_file(res.csv_paths[1]);
  CHECK(per_trial.rfind("# config: {", 0) == 0);
  CHECK(agg.rfind("# config: {", 0) == 0);

  const std::vector<std::string> pt = csv_lines(per_trial);
  const std::vector<std::string> ag = csv_lines(agg);
  CHECK(pt[0] == "q,alpha_max_sq_db,trial,residual_power,success");
  CHECK(ag[0] == "q,alpha_max_sq_db,success_prob,trials");
  CHECK(pt.size() == 1 + 13 * 4 * 2);
  CHECK(ag.size() == 1 + 52);

  // the aggregate is exactly the per-trial success fraction, cell by cell
  std::map<std::string, std::pair<double, int>> acc;
  for (size_t i = 1; i < pt.size(); ++i) {
    const auto c = cells_of(pt[i]);
    REQUIRE(c.size() == 5);
    acc[c[0] + "," + c[1]].first += to_double(c[4]);
    acc[c[0] + "," + c[1]].second += 1;
  }
  for (size_t i = 1; i < ag.size(); ++i) {
    const auto c = cells_of(ag[i]);
    REQUIRE(c.size() == 4);
    const auto& [sum, n] = acc[c[0] + "," + c[1]];
    CHECK(n == 2);
    CHECK(to_double(c[2]) == doctest::Approx(sum / n).epsilon(1e-15));
    CHECK(c[3] == "2");
  }
}

TEST_CASE("reruns and worker counts give identical bytes") {
  const std::string text = R"([experiment]
kind = powermin_power
trials = 2
seed = 9
schemes = srb, fully_active
out_csv = w.csv

[scenario]
k = 2
q1 = 2
q2 = 2
alpha_max_sq_db = 10

[sweep]
rate_req_bps_hz = 0.3, 0.5
)";
  const ExperimentSpec spec = parse_spec(text);
  const fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2"), d3 = fresh_dir("det3");
  run_experiment(spec, text, d1.string(), 1);
  run_experiment(spec, text, d2.string(), 3);
  run_experiment(spec, text, d3.string(), 1);
  const std::string r1 = read_file(d1 / "w.csv");
  CHECK(r1 == read_file(d2 / "w.csv"));
  CHECK(r1 == read_file(d3 / "w.csv"));
  CHECK(read_file(d1 / "w_manifest.json") == read_file(d2 / "w_manifest.json"));

  const std::vector<std::string> lines = csv_lines(r1);
  CHECK(lines[0] ==
        "rate_req_bps_hz,trial,scheme,status,feasible,power_w,active_res,dca_iters,"
        "outer_iters");
  CHECK(lines.size() == 1 + 2 * 2 * 2);
}

TEST_CASE("manifest records hashes of the spec and outputs") {
  const std::string text = R"([experiment]
kind = sumrate_vs_budget
trials = 1
seed = 5
schemes = one_loop
out_csv = b.csv

[scenario]
k = 2
q1 = 2
q2 = 2

[sweep]
p_ris_budget_dbm = 10
)";
  const ExperimentSpec spec = parse_spec(text);
  const fs::path dir = fresh_dir("manifest");
  const RunResult res = run_experiment(spec, text, dir.string(), 1);

  const nlohmann::json m = nlohmann::json::parse(read_file(res.manifest_path));
  CHECK(m["experiment"] == "sumrate_vs_budget");
  CHECK(m["spec_sha1"] == sha1_git_blob(text));
  REQUIRE(m["outputs"].size() == 1);
  CHECK(m["outputs"][0]["path"] == "b.csv");
  CHECK(m["outputs"][0]["sha1"] == sha1_git_blob(read_file(res.csv_paths[0])));
  CHECK(m["config"]["scenario"]["xi"] == 1.25);
  CHECK(m["config"]["seed"] == 5);
  CHECK(m["config"]["schemes"] == nlohmann::json::array({"one_loop"}));
  CHECK(m["config"]["tolerances"]["gap_tol"] == 1e-7);
}

TEST_CASE("sweep rows replay direct library calls") {
  const std::string text = R"([experiment]
kind = sumrate_vs_budget
trials = 2
seed = 21
schemes = one_loop, srb
out_csv = s.csv

[scenario]
k = 2
q1 = 2
q2 = 2
alpha_max_sq_db = 30

[sweep]
p_ris_budget_dbm = 0, 10
)";
  const ExperimentSpec spec = parse_spec(text);
  const fs::path dir = fresh_dir("replay");
  const RunResult res = run_experiment(spec, text, dir.string(), 1);
  const std::vector<std::string> lines = csv_lines(read_file(res.csv_paths[0]));
  REQUIRE(lines.size() == 1 + 2 * 2 * 2);

  // row for budget 10 dBm, trial 1, one_loop
  ScenarioConfig cfg = spec.base;
  cfg.p_ris_budget_dbm = 10.0;
  auto rng = make_rng(21, 1);
  const ChannelRealization ch = sample_channels(cfg, rng);
  const SolveReport rep = sumrate_one_loop(ch, cfg, sumrate_init(ch, cfg));

  bool found = false;
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto c = cells_of(lines[i]);
    REQUIRE(c.size() == 7);
    if (c[0] == "10" && c[1] == "1" && c[2] == "one_loop") {
      found = true;
      CHECK(c[3] == to_string(rep.status));
      CHECK(to_double(c[4]) == rep.objective);
      CHECK(to_double(c[5]) == static_cast<double>(rep.active_res));
      CHECK(to_double(c[6]) == rep.power_w);
    }
  }
  CHECK(found);
}

TEST_CASE("convergence rows replay the solver trajectory") {
  const std::string text = R"([experiment]
kind = sumrate_convergence
trials = 1
seed = 13
schemes = one_loop
out_csv = c.csv

[scenario]
k = 2
q1 = 2
q2 = 2
)";
  const ExperimentSpec spec = parse_spec(text);
  const fs::path dir = fresh_dir("conv");
  const RunResult res = run_experiment(spec, text, dir.string(), 1);
  const std::vector<std::string> lines = csv_lines(read_file(res.csv_paths[0]));
  CHECK(lines[0] == "iteration,trial,scheme,sum_rate,status");

  auto rng = make_rng(13, 0);
  const ChannelRealization ch = sample_channels(spec.base, rng);
  const SolveReport rep = sumrate_one_loop(ch, spec.base, sumrate_init(ch, spec.base));
  REQUIRE(lines.size() == 1 + rep.trajectory.size());
  for (size_t i = 1; i < lines.size(); ++i) {
    const auto c = cells_of(lines[i]);
    REQUIRE(c.size() == 5);
    CHECK(c[0] == std::to_string(i - 1));
    CHECK(to_double(c[3]) == rep.trajectory[i - 1]);
  }
}

TEST_CASE("summarize reduces a single row to its value") {
  const std::string out = summarize_csv("p,trial,scheme,status,val\n1,0,a,optimal,5\n");
  CHECK(out ==
        "p,scheme,metric,n,mean,stderr\n"
        "1,a,val,1,5,0\n");
}

TEST_CASE("summarize computes fractions, pairs, and skips nan") {
  const std::string csv =
      "r,trial,scheme,status,feasible,power_w\n"
      "0.5,0,srb,optimal,1,2\n"
      "0.5,1,srb,optimal,1,4\n"
      "0.5,2,srb,optimal,0,nan\n"
      "0.5,0,full,optimal,1,5\n"
      "0.5,1,full,optimal,1,9\n"
      "0.5,2,full,optimal,1,7\n";
  const std::string out = summarize_csv(csv);
  const std::vector<std::string> lines = csv_lines(out);
  CHECK(lines[0] == "r,scheme,metric,n,mean,stderr");

  auto line_with = [&](const std::string& scheme, const std::string& metric) {
    for (const std::string& l : lines) {
      const auto c = cells_of(l);
      if (c.size() == 6 && c[1] == scheme && c[2] == metric) return c;
    }
    REQUIRE(false);
    return std::vector<std::string>{};
  };

  // success_prob is the fraction of feasible rows
  CHECK(to_double(line_with("srb", "success_prob")[4]) == doctest::Approx(2.0 / 3));
  CHECK(line_with("full", "success_prob")[4] == "1");
  // nan power cells are missing, not zero
  CHECK(line_with("srb", "power_w")[3] == "2");
  CHECK(to_double(line_with("srb", "power_w")[4]) == doctest::Approx(3.0));
  // exactly two schemes: paired differences over shared trials
  const auto diff = line_with("srb-full", "power_w");
  CHECK(diff[3] == "2");  // trial 2 dropped, srb power is nan there
  CHECK(to_double(diff[4]) == doctest::Approx(0.5 * ((2 - 5) + (4 - 9))));
  const auto dfeas = line_with("srb-full", "success_prob");
  CHECK(dfeas[3] == "3");
  CHECK(to_double(dfeas[4]) == doctest::Approx(-1.0 / 3));

  // single-trial stderr is zero by convention
  CHECK(line_with("srb", "power_w")[5] != "nan");
}

TEST_CASE("summarize rejects foreign schemas") {
  CHECK_THROWS_AS(summarize_csv("a,b\n1,2\n"), std::runtime_error);          // no trial
  CHECK_THROWS_AS(summarize_csv("trial,scheme\n0,a\n"), std::runtime_error);  // no metric
  CHECK_THROWS_AS(summarize_csv("p,trial,val\n1,0\n"), std::runtime_error);   // ragged row
  CHECK_THROWS_AS(summarize_csv("p,trial,val\n1,0,abc\n"), std::runtime_error);
  CHECK_THROWS_AS(summarize_csv(""), std::runtime_error);
}

TEST_CASE("parallel_for covers every index once, any worker count") {
  for (int workers : {1, 2, 5}) {
    std::vector<int> hits(40, 0);
    parallel_for(40, workers, [&](int i) { hits[static_cast<size_t>(i)] += i; });
    for (int i = 0; i < 40; ++i) CHECK(hits[static_cast<size_t>(i)] == i);
  }
  parallel_for(0, 4, [&](int) { REQUIRE(false); });
}
