#include "config_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace ecc::cli {

void ExperimentOptions::bind(CLI::App& app, bool require_seed) {
  seed_required = require_seed;
  app.add_option("--config", config_path, "key = value file; flags override its entries");
  app.add_option("--n", n, "rows per split")->capture_default_str();
  app.add_option("--c", c, "aspect ratio; p = round(c n)")->capture_default_str();
  app.add_option("--split", split, "2 or 3")->capture_default_str();
  app.add_option("--rho", rho, "error correlation")->capture_default_str();
  app.add_option("--coeff-style", coeff_style, "uniform | exact")->capture_default_str();
  app.add_option("--u", u, "norm of alpha0")->capture_default_str();
  app.add_option("--v", v, "norm of beta0")->capture_default_str();
  app.add_option("--varrho", varrho, "alpha0^T beta0 (exact style only)")->capture_default_str();
  app.add_option("--grid", grid, "lo:hi:count[:log] or x1,x2,...")->capture_default_str();
  app.add_option("--kinds", kinds, "comma list of INT, NR, DR")->capture_default_str();
  app.add_option("--reps", reps, "replicates per lambda")->capture_default_str();
  seed_opt = app.add_option("--seed", seed, "master seed");
  app.add_option("--method", method, "constants: quad | mc")->capture_default_str();
  app.add_option("--mc-iters", mc_iters)->capture_default_str();
  app.add_option("--mc-n", mc_n)->capture_default_str();
  app.add_option("--nr2sp", nr2sp, "proof | display")->capture_default_str();
  app.add_flag("--redraw-coeffs", redraw_coeffs, "draw fresh coefficients per replicate");
  app.add_option("--threads", threads, "worker threads; output does not depend on it")->capture_default_str();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  const auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end() || it + 1 == args.end()) return args;
  std::ifstream in(*(it + 1));
  if (!in) throw ConfigError("cannot read config file " + *(it + 1));
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("bad config line: " + line);
    const std::string flag = "--" + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    if (flag == "--redraw-coeffs") {
      if (value == "true") extra.push_back(flag);
      else if (value != "false") throw ConfigError("redraw-coeffs must be true or false");
      continue;
    }
    extra.push_back(flag);
    extra.push_back(value);
  }
  std::vector<std::string> out(args.begin(), it + 2);
  out.insert(out.end(), extra.begin(), extra.end());
  out.insert(out.end(), it + 2, args.end());
  return out;
}

std::vector<EstimatorKind> parse_kinds(const std::string& s) {
  std::vector<EstimatorKind> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto k = parse_kind(tok);
    for (auto e : out)
      if (e == k) throw ConfigError("duplicate kind " + tok);
    out.push_back(k);
  }
  if (out.empty()) throw ConfigError("no estimator kinds given");
  return out;
}

ConstantsSpec parse_method(const std::string& method, int mc_iters, long mc_n, std::uint64_t seed) {
  ConstantsSpec spec;
  if (method == "quad") {
    spec.method = ConstantsMethod::Quadrature;
  } else if (method == "mc") {
    spec.method = ConstantsMethod::MonteCarlo;
    require(mc_iters >= 1, "mc-iters must be >= 1");
    require(mc_n >= 10, "mc-n must be >= 10");
  } else {
    throw ConfigError("method must be quad or mc");
  }
  spec.mc_iters = mc_iters;
  spec.mc_n = mc_n;
  spec.mc_seed = substream_seed(seed, {0xC0257ULL});
  return spec;
}

Nr2spVariant parse_nr2sp(const std::string& s) {
  if (s == "proof") return Nr2spVariant::ProofVersion;
  if (s == "display") return Nr2spVariant::DisplayVersion;
  throw ConfigError("nr2sp must be proof or display");
}

ExperimentConfig ExperimentOptions::to_config() const {
  if (seed_required && seed_opt->count() == 0) throw ConfigError("--seed is required");
  ExperimentConfig cfg;
  cfg.n_per_split = n;
  cfg.c = c;
  cfg.split = parse_split(split);
  cfg.rho = rho;
  cfg.coeff = {parse_style(coeff_style), u, v, varrho};
  cfg.grid = GridSpec::parse(grid);
  cfg.kinds = parse_kinds(kinds);
  cfg.reps = reps;
  cfg.master_seed = seed;
  cfg.constants = parse_method(method, mc_iters, mc_n, seed);
  cfg.nr2sp_variant = parse_nr2sp(nr2sp);
  cfg.redraw_coeffs = redraw_coeffs;
  cfg.threads = threads;
  cfg.validate();
  return cfg;
}

}  // namespace ecc::cli
