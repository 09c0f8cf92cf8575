#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "risbf/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Rewrites "key = ..." lines in a template; keys are unique per template.
std::string set_key(const std::string& text, const std::string& key,
                    const std::string& value) {
  std::istringstream in(text);
  std::string line, out;
  while (std::getline(in, line)) {
    const size_t pos = line.find_first_not_of(" \t");
    if (pos != std::string::npos && line.compare(pos, key.size(), key) == 0) {
      const size_t after = line.find_first_not_of(" \t", pos + key.size());
      if (after != std::string::npos && line[after] == '=') line = key + " = " + value;
    }
    out += line + "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse reflect-beamforming design: batch experiment driver"};
  app.require_subcommand(1);

  std::string spec_path, csv_path, experiment_name;
  std::uint64_t seed = 0;
  int trials = 0;
  int workers = 1;
  std::string out_dir = ".";

  CLI::App* run = app.add_subcommand("run", "execute an experiment spec");
  run->add_option("spec", spec_path, "spec file path")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed, "override the spec seed");
  CLI::Option* run_trials =
      run->add_option("--trials", trials, "override the spec trial count");
  run->add_option("--workers", workers, "worker threads for trial-level parallelism");
  run->add_option("--out-dir", out_dir, "directory for result files");

  CLI::App* summ = app.add_subcommand("summarize", "aggregate a results csv to stdout");
  summ->add_option("csv", csv_path, "results csv path")->required();

  CLI::App* gen = app.add_subcommand("gen-spec", "write a template spec file");
  gen->add_option("experiment", experiment_name,
                  "nulling_prob | sumrate_convergence | sumrate_vs_pk | "
                  "sumrate_vs_budget | powermin_success | powermin_power")
      ->required();
  CLI::Option* gen_seed = gen->add_option("--seed", seed, "seed to pin in the template");
  CLI::Option* gen_trials =
      gen->add_option("--trials", trials, "trial count to pin in the template");
  gen->add_option("--out-dir", out_dir, "directory for the spec file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const std::string text = read_file(spec_path);
      risbf::ExperimentSpec spec;
      try {
        spec = risbf::parse_spec(text);
      } catch (const risbf::SpecParseError& e) {
        std::cerr << spec_path << ":" << e.line << ":" << e.col << ": " << e.what()
                  << "\n";
        return 2;
      }
      if (run_seed->count() > 0) spec.base.seed = seed;
      if (run_trials->count() > 0) {
        if (trials < 1) throw std::runtime_error("trials: must be >= 1");
        spec.trials = trials;
      }
      const risbf::RunResult res = risbf::run_experiment(spec, text, out_dir, workers);
      for (const std::string& p : res.csv_paths) std::cout << p << "\n";
      std::cout << res.manifest_path << "\n";
      return 0;
    }

    if (summ->parsed()) {
      std::cout << risbf::summarize_csv(read_file(csv_path));
      return 0;
    }

    const risbf::ExperimentKind kind = risbf::experiment_kind_from(experiment_name);
    std::string text = risbf::spec_template(kind);
    if (gen_seed->count() > 0) text = set_key(text, "seed", std::to_string(seed));
    if (gen_trials->count() > 0) {
      if (trials < 1) throw std::runtime_error("trials: must be >= 1");
      text = set_key(text, "trials", std::to_string(trials));
    }
    std::filesystem::create_directories(out_dir.empty() ? "." : out_dir);
    const std::filesystem::path path =
        std::filesystem::path(out_dir.empty() ? "." : out_dir) /
        (experiment_name + ".spec");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    std::cout << path.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
