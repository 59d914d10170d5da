#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "config_io.hpp"
#include "ecc/ecc.hpp"

namespace ecc::cli {
namespace {

namespace fs = std::filesystem;

std::string g(double x) { return fmt_double(x); }

struct Outputs {
  std::ostream& out;
  std::ostream& err;
};

std::ostream& open_or(const std::string& path, std::ofstream& file, std::ostream& fallback) {
  if (path.empty() || path == "-") return fallback;
  file.open(path, std::ios::binary);
  if (!file) throw ConfigError("cannot write " + path);
  return file;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir + ": " + ec.message());
}

// ---- mp check ----

int run_mp_check(double c, const Outputs& io) {
  const MpLaw law(c);
  const double tol = 1e-8;
  bool all = true;
  fmt::print(io.out, "{:<10} {:>24} {:>24} {:>10} {}\n", "identity", "value", "expected", "abs_err", "status");
  auto row = [&](const std::string& name, double val, double expect) {
    const double e = std::abs(val - expect);
    const bool ok = e <= tol;
    all = all && ok;
    fmt::print(io.out, "{:<10} {:>24.17g} {:>24.17g} {:>10.2e} {}\n", name, val, expect, e, ok ? "PASS" : "FAIL");
  };
  row("mass", mp_integral(law, SpectralIntegrand{0, 0.0, 0, 0.0, 0, 1.0}), 1.0);
  // first and second moment folded into one row: max error
  const double m1 = mp_integral(law, SpectralIntegrand{1, 0.0, 0, 0.0, 0, 1.0});
  const double m2 = mp_integral(law, SpectralIntegrand{2, 0.0, 0, 0.0, 0, 1.0});
  const bool m1_worse = std::abs(m1 - 1.0) >= std::abs(m2 - (1.0 + c));
  row("moments", m1_worse ? m1 : m2, m1_worse ? 1.0 : 1.0 + c);
  double worst = 0.0, worst_val = 1.0;
  for (double lam : {0.05, 0.5, 1.0, 5.0, 10.0}) {
    const double v = resolvent_mass(law, lam) + lam * stieltjes(law, lam);
    if (std::abs(v - 1.0) >= worst) {
      worst = std::abs(v - 1.0);
      worst_val = v;
    }
  }
  row("stieltjes", worst_val, 1.0);
  return all ? 0 : 3;
}

// ---- constants ----

int run_constants(double c, double l1, double l2, const std::string& method, int iters, long mc_n,
                  std::uint64_t seed, const Outputs& io) {
  require(c > 0.0, "c must be positive");
  require(l1 > 0.0 && l2 > 0.0, "lambda1 and lambda2 must be positive");
  const MpLaw law(c);
  const auto spec = parse_method(method, iters, mc_n, seed);
  const auto r = compute_constants_with_error(law, l1, l2, spec);
  const auto& k = r.value;
  fmt::print(io.out, "name,value,std_err\n");
  fmt::print(io.out, "g_int_3sp,{},{}\n", g(k.int3), g(r.std_err.int3));
  fmt::print(io.out, "g1_int_2sp,{},{}\n", g(k.g1), g(r.std_err.g1));
  fmt::print(io.out, "g2_int_2sp,{},{}\n", g(k.g2), g(r.std_err.g2));
  fmt::print(io.out, "g_nr,{},{}\n", g(k.nr), g(r.std_err.nr));
  fmt::print(io.out, "g_dr_3sp,{},{}\n", g(k.dr3), g(r.std_err.dr3));
  fmt::print(io.out, "g_dr2_2sp,{},{}\n", g(k.dr2), g(r.std_err.dr2));
  for (auto split : {Split::ThreeSplit, Split::TwoSplit}) {
    for (auto kind : kAllKinds) {
      const std::string tag = fmt::format("{}_{}sp", to_string(kind), split_count(split));
      try {
        const auto h = normalizer(kind, split, k);
        fmt::print(io.out, "H_{},{},\nK_{},{},\n", tag, g(h.H), tag, g(h.K));
      } catch (const DegenerateNormalizer&) {
        fmt::print(io.out, "H_{},NA,\nK_{},NA,\n", tag, tag);
      }
    }
  }
  return 0;
}

// ---- simulate / summarize ----

int run_simulate(const ExperimentOptions& opts, const std::string& out_dir, const Outputs& io) {
  const ExperimentConfig cfg = opts.to_config();
  ensure_dir(out_dir);
  const ExperimentResult res = run_experiment(cfg);
  std::ostringstream rec, sum;
  write_records_csv(rec, res.records);
  write_summary_csv(sum, res.summaries);
  write_file(out_dir + "/records.csv", rec.str());
  write_file(out_dir + "/summary.csv", sum.str());
  write_file(out_dir + "/config.txt", cfg.canonical());
  fmt::print(io.out, "config_hash {:016x}\nrecords {}\nsummaries {}\n", cfg.hash(), res.records.size(),
             res.summaries.size());
  return 0;
}

int run_summarize(const ExperimentOptions& opts, const std::string& records_path, const std::string& out_path,
                  const Outputs& io) {
  const ExperimentConfig cfg = opts.to_config();
  std::ifstream in(records_path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + records_path);
  const auto recs = read_records_csv(in);
  const TheoryTable tt = theory_table(cfg);
  std::ofstream file;
  write_summary_csv(open_or(out_path, file, io.out), summarize(cfg, tt, recs));
  return 0;
}

// ---- variance curve / optimize ----

struct LimitOptions {
  double u = 1.0, v = 1.0, varrho = 0.75, rho = 0.5, c = 0.5;
  std::string grid = "0.05:10:100";
  void bind(CLI::App& app) {
    app.add_option("--u", u)->capture_default_str();
    app.add_option("--v", v)->capture_default_str();
    app.add_option("--varrho", varrho)->capture_default_str();
    app.add_option("--rho", rho)->capture_default_str();
    app.add_option("--c", c)->capture_default_str();
    app.add_option("--grid", grid, "lo:hi:count[:log] or x1,x2,...")->capture_default_str();
  }
  LimitParams params() const {
    LimitParams p{u, v, varrho, rho, c};
    p.validate();
    return p;
  }
};

int run_variance_curve(const LimitOptions& lo, const std::string& kinds, const std::string& splits,
                       const std::string& nr2sp, const std::string& out_path, const Outputs& io) {
  const LimitParams p = lo.params();
  const auto grid = GridSpec::parse(lo.grid).values();
  const auto ks = parse_kinds(kinds);
  const auto variant = parse_nr2sp(nr2sp);
  std::vector<Split> sp;
  for (char ch : splits) {
    if (ch == ',') continue;
    sp.push_back(parse_split(ch - '0'));
  }
  require(!sp.empty(), "no splits given");
  std::ofstream file;
  std::ostream& o = open_or(out_path, file, io.out);
  o << "kind,split,lambda,total,var_of_cond_exp,exp_of_cond_var,degenerate_flag\n";
  for (auto k : ks)
    for (auto s : sp)
      for (const auto& pt : variance_curve(k, s, p, grid, variant)) {
        if (pt.value)
          o << to_string(k) << ',' << split_count(s) << ',' << g(pt.lambda) << ',' << g(pt.value->total) << ','
            << g(pt.value->var_of_cond_exp) << ',' << g(pt.value->exp_of_cond_var) << ",0\n";
        else
          o << to_string(k) << ',' << split_count(s) << ',' << g(pt.lambda) << ",NA,NA,NA,1\n";
      }
  return 0;
}

int run_optimize(const LimitOptions& lo, const std::string& kind, int split, const std::string& nr2sp,
                 const Outputs& io) {
  const LimitParams p = lo.params();
  const auto grid = GridSpec::parse(lo.grid).values();
  const auto r = optimize_lambda(parse_kind(kind), parse_split(split), p, grid, parse_nr2sp(nr2sp));
  const double pred = prediction_optimal_lambda(MpLaw(p.c), p.u);
  double step = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i) step = std::max(step, grid[i] - grid[i - 1]);
  const bool differ = std::abs(r.lambda_star - pred) > step;
  int missing = 0;
  for (const auto& pt : r.curve) missing += pt.value ? 0 : 1;
  fmt::print(io.out, "kind {}\nsplit {}\nlambda_star {}\nvariance_at_star {}\nprediction_optimal {}\n", kind, split,
             g(r.lambda_star), g(r.value), g(pred));
  fmt::print(io.out, "degenerate_points {}\nunequal {}\n", missing, differ ? "yes" : "no");
  return 0;
}

// ---- bootstrap ----

int run_bootstrap(const ExperimentOptions& opts, int B, const std::string& out_path, const Outputs& io) {
  const ExperimentConfig cfg = opts.to_config();
  const TheoryTable tt = theory_table(cfg);
  const auto fixed = draw_coefficients(cfg, cfg.master_seed);
  std::ofstream file;
  std::ostream& o = open_or(out_path, file, io.out);
  o << "kind,split,lambda,n,p,B,variance_estimate,clamped_fraction\n";
  for (std::size_t q = 0; q < cfg.kinds.size(); ++q) {
    const EstimatorKind k = cfg.kinds[q];
    for (std::size_t i = 0; i < tt.lambdas.size(); ++i) {
      const double lam = tt.lambdas[i];
      const auto& h = tt.per_lambda[i].norm.at(k);
      const std::uint64_t seed = cell_seed(cfg.master_seed, i, 0);
      std::string var = "NA", frac = "NA";
      if (h) {
        const CellFits cf = run_cell(cfg, cell_model(cfg, fixed, seed), lam, seed);
        const DebiasPlan plan{k, cfg.split, lam, lam, tt.per_lambda[i].g, cfg.constants, cfg.nr2sp_variant};
        const double rho_hat = debiased_from_stats(k, cf.stats, *h);
        const auto br = bootstrap_variance(plan, cf.fits.alpha_hat, cf.fits.beta_hat, rho_hat, cfg.n_per_split, B,
                                           substream_seed(seed, {0xB0071ULL, q}), cfg.threads);
        var = g(br.variance_estimate);
        frac = br.clamped ? "1" : "0";
      }
      o << to_string(k) << ',' << split_count(cfg.split) << ',' << g(lam) << ',' << cfg.n_per_split << ','
        << cfg.p() << ',' << B << ',' << var << ',' << frac << "\n";
    }
  }
  return 0;
}

int run_bootstrap_validate(const ExperimentOptions& opts, int B, int boot_outer, const std::string& out_dir,
                           const Outputs& io) {
  const ExperimentConfig cfg = opts.to_config();
  require(cfg.reps >= 50, "bootstrap validation needs reps (outer replicates) >= 50");
  ensure_dir(out_dir);
  const auto bv = validate_bootstrap(cfg, B, boot_outer);
  std::ostringstream pts, sum;
  pts << "kind,split,lambda,true_se,boot_se,ratio,clamped\n";
  for (const auto& p : bv.points)
    pts << to_string(p.kind) << ',' << split_count(cfg.split) << ',' << g(p.lambda) << ',' << g(p.true_se) << ','
        << g(p.boot_se) << ',' << g(p.ratio) << ',' << p.clamped << "\n";
  sum << "kind,split,c,min,q1,median,mean,q3,max,points\n";
  for (auto k : cfg.kinds) {
    const auto& s = bv.ratio_summary.at(k);
    sum << to_string(k) << ',' << split_count(cfg.split) << ',' << g(cfg.c) << ',' << g(s.min) << ',' << g(s.q1)
        << ',' << g(s.median) << ',' << g(s.mean) << ',' << g(s.q3) << ',' << g(s.max) << ',' << s.count << "\n";
  }
  write_file(out_dir + "/boot_points.csv", pts.str());
  write_file(out_dir + "/boot_ratio.csv", sum.str());
  write_file(out_dir + "/config.txt", cfg.canonical());
  io.out << sum.str();
  return 0;
}

// ---- prediction MSE ----

int run_pred_mse(double c, double u, const std::string& grid_s, long n, int reps, std::uint64_t seed, int threads,
                 const std::string& out_path, const Outputs& io) {
  require(c > 0.0 && u > 0.0, "c and u must be positive");
  const auto grid = GridSpec::parse(grid_s).values();
  const MpLaw law(c);
  std::ofstream file;
  std::ostream& o = open_or(out_path, file, io.out);
  if (reps == 0) {
    o << "lambda,mse_theory\n";
    for (double lam : grid) o << g(lam) << ',' << g(prediction_mse_theory(law, u, lam)) << "\n";
  } else {
    const auto curve = mse_curve(c, n, u, grid, reps, seed, threads);
    o << "lambda,mse_theory,mse_emp,mse_se\n";
    for (const auto& pt : curve)
      o << g(pt.lambda) << ',' << g(pt.mse_theory) << ',' << g(pt.mse_emp) << ',' << g(pt.mse_se) << "\n";
  }
  io.err << "prediction_optimal_lambda " << g(prediction_optimal_lambda(law, u)) << "\n";
  return 0;
}

// ---- lemma probe ----

int run_lemma_probe(double u, double v, double varrho, double c, int a, int b, double lam, long n, int draws,
                    std::uint64_t seed, int threads, const Outputs& io) {
  require(a >= 0 && b >= 0, "powers must be non-negative");
  require(b == 0 || lam > 0.0, "pole must be positive");
  const SpectralIntegrand f{a, lam, b, 0.0, 0, 1.0};
  const auto r = lemma_e_probe(u, v, varrho, c, f, n, draws, seed, threads);
  fmt::print(io.out, "empirical {}\ntheory {}\nratio {}\n", g(r.empirical), g(r.theory), g(r.empirical / r.theory));
  return 0;
}

int exit_code(const Error& e) { return static_cast<int>(e.error_class()); }

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Outputs io{out, err};
  CLI::App app{"Debiased expected-conditional-covariance estimators with ridge nuisances", "ecc"};
  app.require_subcommand(1);

  // mp check
  auto* mp = app.add_subcommand("mp", "Marchenko-Pastur law utilities");
  mp->require_subcommand(1);
  auto* mp_check = mp->add_subcommand("check", "mass, moment and Stieltjes identities");
  double mp_c = 1.0;
  mp_check->add_option("--c", mp_c)->required();

  auto* cons = app.add_subcommand("constants", "bias-correction constants and normalizers");
  double cc = 0.5, l1 = 1.0, l2 = 1.0;
  std::string method = "quad";
  int mc_iters = 10000;
  long mc_n = 500;
  std::uint64_t cseed = 1;
  cons->add_option("--c", cc)->required();
  cons->add_option("--lambda1", l1)->required();
  cons->add_option("--lambda2", l2)->required();
  cons->add_option("--method", method)->capture_default_str();
  cons->add_option("--mc-iters", mc_iters)->capture_default_str();
  cons->add_option("--mc-n", mc_n)->capture_default_str();
  cons->add_option("--seed", cseed)->capture_default_str();

  ExperimentOptions sim_opts;
  std::string sim_out = "out";
  auto* sim = app.add_subcommand("simulate", "Monte Carlo experiment; writes records.csv and summary.csv");
  sim_opts.bind(*sim, true);
  sim->add_option("--out", sim_out, "output directory")->capture_default_str();

  ExperimentOptions sum_opts;
  std::string sum_records, sum_out;
  auto* summ = app.add_subcommand("summarize", "rebuild summary.csv from records.csv and its config");
  sum_opts.bind(*summ, true);
  summ->add_option("--records", sum_records)->required();
  summ->add_option("--out", sum_out, "summary file (default stdout)");

  LimitOptions vc_opts;
  std::string vc_kinds = "INT,NR,DR", vc_splits = "2,3", vc_nr2sp = "proof", vc_out;
  auto* vc = app.add_subcommand("variance-curve", "limiting variance over a lambda grid (CSV)");
  vc_opts.bind(*vc);
  vc->add_option("--kinds", vc_kinds)->capture_default_str();
  vc->add_option("--splits", vc_splits)->capture_default_str();
  vc->add_option("--nr2sp", vc_nr2sp)->capture_default_str();
  vc->add_option("--out", vc_out, "CSV file (default stdout)");

  LimitOptions op_opts;
  std::string op_kind, op_nr2sp = "proof";
  int op_split = 3;
  auto* opt = app.add_subcommand("optimize", "variance-optimal lambda vs prediction-optimal lambda");
  op_opts.bind(*opt);
  opt->add_option("--kind", op_kind)->required();
  opt->add_option("--split", op_split)->required();
  opt->add_option("--nr2sp", op_nr2sp)->capture_default_str();

  ExperimentOptions bs_opts;
  int bs_B = 2000;
  std::string bs_out;
  auto* bs = app.add_subcommand("bootstrap", "parametric bootstrap variance on one simulated dataset per lambda");
  bs_opts.bind(*bs, true);
  bs->add_option("--B", bs_B)->capture_default_str();
  bs->add_option("--out", bs_out, "CSV file (default stdout)");

  ExperimentOptions bv_opts;
  int bv_B = 2000, bv_outer = 10;
  std::string bv_out = "out";
  auto* bv = app.add_subcommand("bootstrap-validate", "true SE / bootstrap SE ratios over the lambda grid");
  bv_opts.bind(*bv, true);
  bv->add_option("--B", bv_B)->capture_default_str();
  bv->add_option("--boot-outer", bv_outer, "outer replicates that get bootstrapped")->capture_default_str();
  bv->add_option("--out", bv_out, "output directory")->capture_default_str();

  double pm_c = 0.5, pm_u = 1.0;
  std::string pm_grid = "0.05:10:100", pm_out;
  long pm_n = 500;
  int pm_reps = 0, pm_threads = 1;
  std::uint64_t pm_seed = 1;
  auto* pm = app.add_subcommand("pred-mse", "ridge prediction risk: theory, optionally Monte Carlo");
  pm->add_option("--c", pm_c)->required();
  pm->add_option("--u", pm_u)->required();
  pm->add_option("--grid", pm_grid)->capture_default_str();
  pm->add_option("--n", pm_n)->capture_default_str();
  pm->add_option("--reps", pm_reps, "0 = theory only")->capture_default_str();
  pm->add_option("--seed", pm_seed)->capture_default_str();
  pm->add_option("--threads", pm_threads)->capture_default_str();
  pm->add_option("--out", pm_out, "CSV file (default stdout)");

  double lp_u = 1.0, lp_v = 1.0, lp_varrho = 0.0, lp_c = 0.5, lp_lam = 1.0;
  int lp_a = 1, lp_b = 1, lp_draws = 2000, lp_threads = 1;
  long lp_n = 500;
  std::uint64_t lp_seed = 1;
  auto* lp = app.add_subcommand("lemma-probe", "bilinear spectral variance: Monte Carlo vs limit");
  lp->add_option("--u", lp_u)->capture_default_str();
  lp->add_option("--v", lp_v)->capture_default_str();
  lp->add_option("--varrho", lp_varrho)->capture_default_str();
  lp->add_option("--c", lp_c)->capture_default_str();
  lp->add_option("--power", lp_a, "f = x^power / (x + pole)^pole-power")->capture_default_str();
  lp->add_option("--pole-power", lp_b)->capture_default_str();
  lp->add_option("--pole", lp_lam)->capture_default_str();
  lp->add_option("--n", lp_n)->capture_default_str();
  lp->add_option("--draws", lp_draws)->capture_default_str();
  lp->add_option("--seed", lp_seed)->capture_default_str();
  lp->add_option("--threads", lp_threads)->capture_default_str();

  try {
    const auto full = expand_config(args);
    std::vector<std::string> rev(full.rbegin(), full.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*mp_check) return run_mp_check(mp_c, io);
    if (*cons) return run_constants(cc, l1, l2, method, mc_iters, mc_n, cseed, io);
    if (*sim) return run_simulate(sim_opts, sim_out, io);
    if (*summ) return run_summarize(sum_opts, sum_records, sum_out, io);
    if (*vc) return run_variance_curve(vc_opts, vc_kinds, vc_splits, vc_nr2sp, vc_out, io);
    if (*opt) return run_optimize(op_opts, op_kind, op_split, op_nr2sp, io);
    if (*bs) return run_bootstrap(bs_opts, bs_B, bs_out, io);
    if (*bv) return run_bootstrap_validate(bv_opts, bv_B, bv_outer, bv_out, io);
    if (*pm) return run_pred_mse(pm_c, pm_u, pm_grid, pm_n, pm_reps, pm_seed, pm_threads, pm_out, io);
    if (*lp)
      return run_lemma_probe(lp_u, lp_v, lp_varrho, lp_c, lp_a, lp_b, lp_lam, lp_n, lp_draws, lp_seed, lp_threads,
                             io);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 4;
  }
  err << "error: no subcommand\n";
  return 2;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace ecc::cli
