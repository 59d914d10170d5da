#pragma once

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecc/harness.hpp"

namespace ecc::cli {

// Raw option storage for the experiment-shaped subcommands. Keys of the config
// file equal the long flag names; flags given on the command line win.
struct ExperimentOptions {
  long n = 500;
  double c = 0.5;
  int split = 2;
  double rho = 0.5;
  std::string coeff_style = "uniform";
  double u = 1.0;
  double v = 1.0;
  double varrho = 0.75;
  std::string grid = "0.05:10:100";
  std::string kinds = "INT,NR,DR";
  int reps = 2000;
  std::uint64_t seed = 0;
  std::string method = "quad";
  int mc_iters = 10000;
  long mc_n = 500;
  std::string nr2sp = "proof";
  bool redraw_coeffs = false;
  int threads = 1;

  CLI::Option* seed_opt = nullptr;
  bool seed_required = false;
  std::string config_path;

  void bind(CLI::App& app, bool seed_required);
  ExperimentConfig to_config() const;
};

// Splices the entries of a --config file into args as flags, skipping keys the
// command line already sets. The --config pair itself stays in place.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

std::vector<EstimatorKind> parse_kinds(const std::string& s);
ConstantsSpec parse_method(const std::string& method, int mc_iters, long mc_n, std::uint64_t seed);
Nr2spVariant parse_nr2sp(const std::string& s);

}  // namespace ecc::cli
