#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ecc/avar.hpp"
#include "ecc/debias.hpp"
#include "ecc/dgp.hpp"
#include "ecc/errors.hpp"
#include "ecc/mp_law.hpp"
#include "ecc/parallel.hpp"
#include "ecc/pboot.hpp"
#include "ecc/ridge.hpp"

namespace ecc {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct GridSpec {
  double lo = 0.05;
  double hi = 10.0;
  int count = 100;
  bool log = false;
  std::vector<double> points;  // explicit list; overrides lo/hi/count when non-empty

  std::vector<double> values() const {
    if (!points.empty()) return points;
    require(lo > 0.0 && hi >= lo && count >= 1, "grid needs 0 < lo <= hi and count >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
      const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
      out[i] = log ? lo * std::pow(hi / lo, t) : lo + t * (hi - lo);
    }
    return out;
  }

  // "lo:hi:count[:log]" or "x1,x2,...".
  static GridSpec parse(const std::string& s) {
    GridSpec g;
    auto num = [&](const std::string& tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        throw ConfigError("bad grid number '" + tok + "' in '" + s + "'");
      }
      if (used != tok.size()) throw ConfigError("bad grid number '" + tok + "' in '" + s + "'");
      return v;
    };
    if (s.find(':') == std::string::npos) {
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ',')) g.points.push_back(num(tok));
      require(!g.points.empty(), "empty grid");
      check_grid(g.points);
      return g;
    }
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ':')) parts.push_back(tok);
    require(parts.size() == 3 || (parts.size() == 4 && parts[3] == "log"), "grid syntax is lo:hi:count[:log]");
    g.lo = num(parts[0]);
    g.hi = num(parts[1]);
    const double cnt = num(parts[2]);
    require(cnt >= 1 && cnt == std::floor(cnt), "grid count must be a positive integer");
    g.count = static_cast<int>(cnt);
    g.log = parts.size() == 4;
    g.values();
    return g;
  }

  std::string to_string() const;
};

struct CoeffSpec {
  CoeffStyle style = CoeffStyle::UniformRescaled;
  double u = 1.0;
  double v = 1.0;
  double varrho = 0.75;
};

struct ExperimentConfig {
  long n_per_split = 500;
  double c = 0.5;
  Split split = Split::TwoSplit;
  double rho = 0.5;
  CoeffSpec coeff;
  GridSpec grid;
  std::vector<EstimatorKind> kinds{kAllKinds.begin(), kAllKinds.end()};
  int reps = 2000;
  std::uint64_t master_seed = 1;
  ConstantsSpec constants;
  Nr2spVariant nr2sp_variant = Nr2spVariant::ProofVersion;
  bool redraw_coeffs = false;
  int threads = 1;  // not part of the config identity

  long p() const { return std::lround(c * static_cast<double>(n_per_split)); }
  double c_exact() const { return static_cast<double>(p()) / static_cast<double>(n_per_split); }

  void validate() const {
    require(n_per_split >= 1, "n_per_split must be >= 1");
    require(c > 0.0 && std::isfinite(c), "c must be positive");
    if (p() < 1) throw DimensionError("p = round(c n) must be >= 1");
    require(std::abs(rho) <= 1.0, "rho must lie in [-1, 1]");
    require(reps >= 1, "reps must be >= 1");
    require(!kinds.empty(), "at least one estimator kind is required");
    require(threads >= 1, "threads must be >= 1");
    check_grid(grid.values());
    if (coeff.style == CoeffStyle::ExactGram && p() < 2) throw DimensionError("ExactGram needs p >= 2");
    require(coeff.u > 0.0 && coeff.v > 0.0, "u and v must be positive");
    if (coeff.style == CoeffStyle::ExactGram && std::abs(coeff.varrho) > coeff.u * coeff.v)
      throw CauchySchwarzViolation("|varrho| > u v");
  }

  // Canonical key = value text; also a valid config file.
  std::string canonical() const;
  std::uint64_t hash() const;
};

inline std::string fmt_double(double x) {
  if (std::isnan(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string GridSpec::to_string() const {
  if (!points.empty()) {
    std::string s;
    for (std::size_t i = 0; i < points.size(); ++i) s += (i ? "," : "") + fmt_double(points[i]);
    return s;
  }
  return fmt_double(lo) + ":" + fmt_double(hi) + ":" + std::to_string(count) + (log ? ":log" : "");
}

inline std::string style_name(CoeffStyle s) { return s == CoeffStyle::ExactGram ? "exact" : "uniform"; }
inline CoeffStyle parse_style(const std::string& s) {
  if (s == "exact" || s == "ExactGram") return CoeffStyle::ExactGram;
  if (s == "uniform" || s == "UniformRescaled") return CoeffStyle::UniformRescaled;
  throw ConfigError("unknown coefficient style '" + s + "'");
}

inline std::string ExperimentConfig::canonical() const {
  std::string kinds_s;
  for (std::size_t i = 0; i < kinds.size(); ++i) kinds_s += (i ? "," : "") + std::string(to_string(kinds[i]));
  std::ostringstream o;
  o << "n = " << n_per_split << "\n"
    << "c = " << fmt_double(c) << "\n"
    << "split = " << split_count(split) << "\n"
    << "rho = " << fmt_double(rho) << "\n"
    << "coeff-style = " << style_name(coeff.style) << "\n"
    << "u = " << fmt_double(coeff.u) << "\n"
    << "v = " << fmt_double(coeff.v) << "\n"
    << "varrho = " << fmt_double(coeff.varrho) << "\n"
    << "grid = " << grid.to_string() << "\n"
    << "kinds = " << kinds_s << "\n"
    << "reps = " << reps << "\n"
    << "seed = " << master_seed << "\n"
    << "method = " << (constants.method == ConstantsMethod::Quadrature ? "quad" : "mc") << "\n"
    << "mc-iters = " << constants.mc_iters << "\n"
    << "mc-n = " << constants.mc_n << "\n"
    << "nr2sp = " << (nr2sp_variant == Nr2spVariant::ProofVersion ? "proof" : "display") << "\n"
    << "redraw-coeffs = " << (redraw_coeffs ? "true" : "false") << "\n";
  return o.str();
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t ExperimentConfig::hash() const { return fnv1a64(canonical()); }

struct ExperimentRecord {
  EstimatorKind kind = EstimatorKind::INT;
  Split split = Split::TwoSplit;
  double lambda = 0.0;
  int rep_index = 0;
  double theta_raw = 0.0;
  double theta_debiased = kNaN;  // NaN when degenerate
  bool degenerate = false;
  std::uint64_t seed_used = 0;
};

struct SummaryRow {
  EstimatorKind kind = EstimatorKind::INT;
  Split split = Split::TwoSplit;
  double lambda = 0.0;
  int reps_used = 0;
  double bias = kNaN;
  double bias_se = kNaN;
  double n_var_emp = kNaN;
  double v_theory = kNaN;
  double bias_theory = kNaN;
  double raw_bias = kNaN;
  double raw_bias_se = kNaN;
  bool degenerate = false;
  double boot_ratio = kNaN;
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;
  std::vector<SummaryRow> summaries;
  double varrho_used = 0.0;
};

struct DrawnCoefficients {
  Eigen::VectorXd alpha0, beta0;
};

inline DrawnCoefficients draw_coefficients(const ExperimentConfig& cfg, std::uint64_t seed) {
  auto [a, b] = make_coefficients(cfg.p(), cfg.coeff.u, cfg.coeff.v, cfg.coeff.varrho, cfg.coeff.style, seed);
  return {std::move(a), std::move(b)};
}

inline std::uint64_t cell_seed(std::uint64_t master, std::size_t lambda_index, int rep) {
  return substream_seed(master, {0xCE11ULL, lambda_index, static_cast<std::uint64_t>(rep)});
}

// Fixed coefficients: the experiment's draw, or the replicate's own when redrawn.
inline ModelParams cell_model(const ExperimentConfig& cfg, const DrawnCoefficients& fixed, std::uint64_t seed) {
  if (!cfg.redraw_coeffs) return {fixed.alpha0, fixed.beta0, cfg.rho};
  auto d = draw_coefficients(cfg, seed);
  return {std::move(d.alpha0), std::move(d.beta0), cfg.rho};
}

struct CellFits {
  Dataset data;
  NuisanceFits fits;
  EvalStats stats;
};

inline CellFits run_cell(const ExperimentConfig& cfg, const ModelParams& model, double lambda, std::uint64_t seed) {
  const long n = cfg.n_per_split;
  CellFits out;
  out.data = generate(model, split_count(cfg.split) * n, seed);
  const auto views = split(out.data, SplitLayout::uniform(cfg.split, n));
  const DatasetView& d_beta = cfg.split == Split::ThreeSplit ? views[1] : views[0];
  out.fits = fit_nuisances(cfg.split, views[0], d_beta, lambda, lambda);
  out.stats = eval_stats(out.fits.alpha_hat, out.fits.beta_hat, views.back());
  return out;
}

struct LambdaTheory {
  GConstants g;
  std::map<EstimatorKind, std::optional<Normalizer>> norm;
  std::map<EstimatorKind, double> v_theory;
  std::map<EstimatorKind, double> bias_theory;
};

inline LambdaTheory lambda_theory(const ExperimentConfig& cfg, double lambda, double u, double v, double varrho) {
  const MpLaw law(cfg.c_exact());
  LambdaTheory t;
  t.g = compute_constants(law, lambda, lambda, cfg.constants);
  const LimitParams lp{u, v, varrho, cfg.rho, cfg.c_exact()};
  for (auto k : cfg.kinds) {
    t.bias_theory[k] = asymptotic_bias(k, cfg.split, varrho, cfg.rho, t.g);
    try {
      t.norm[k] = normalizer(k, cfg.split, t.g, cfg.nr2sp_variant);
      t.v_theory[k] = limiting_variance(k, cfg.split, lp, lambda, lambda, cfg.nr2sp_variant).total;
    } catch (const DegenerateNormalizer&) {
      t.norm[k] = std::nullopt;
      t.v_theory[k] = kNaN;
    }
  }
  return t;
}

struct TheoryTable {
  std::vector<double> lambdas;
  std::vector<LambdaTheory> per_lambda;
  double u = 0.0, v = 0.0, varrho = 0.0;
};

inline TheoryTable theory_table(const ExperimentConfig& cfg) {
  const auto fixed = draw_coefficients(cfg, cfg.master_seed);
  TheoryTable tt;
  tt.u = fixed.alpha0.norm();
  tt.v = fixed.beta0.norm();
  tt.varrho = fixed.alpha0.dot(fixed.beta0);
  tt.lambdas = cfg.grid.values();
  tt.per_lambda.resize(tt.lambdas.size());
  parallel_for(tt.lambdas.size(), cfg.threads,
               [&](std::size_t i) { tt.per_lambda[i] = lambda_theory(cfg, tt.lambdas[i], tt.u, tt.v, tt.varrho); });
  return tt;
}

struct MeanSe {
  double mean = kNaN;
  double se = kNaN;
  double var = kNaN;  // R - 1 denominator
  int count = 0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe r;
  r.count = static_cast<int>(xs.size());
  if (xs.empty()) return r;
  double s = 0.0;
  for (double x : xs) s += x;
  r.mean = s / r.count;
  if (r.count < 2) return r;
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  r.var = ss / (r.count - 1);
  r.se = std::sqrt(r.var / r.count);
  return r;
}

// Records are ordered by (kind in cfg order, lambda index, rep).
inline std::vector<SummaryRow> summarize(const ExperimentConfig& cfg, const TheoryTable& tt,
                                         const std::vector<ExperimentRecord>& records) {
  std::vector<SummaryRow> rows;
  const std::size_t L = tt.lambdas.size();
  for (auto k : cfg.kinds) {
    for (std::size_t i = 0; i < L; ++i) {
      std::vector<double> deb, raw;
      bool degenerate = false;
      for (const auto& r : records) {
        if (r.kind != k || r.lambda != tt.lambdas[i]) continue;
        raw.push_back(r.theta_raw);
        if (r.degenerate)
          degenerate = true;
        else
          deb.push_back(r.theta_debiased);
      }
      SummaryRow row;
      row.kind = k;
      row.split = cfg.split;
      row.lambda = tt.lambdas[i];
      row.degenerate = degenerate;
      const MeanSe d = mean_se(deb), w = mean_se(raw);
      row.reps_used = d.count;
      row.bias = d.mean - cfg.rho;
      row.bias_se = d.se;
      row.n_var_emp = static_cast<double>(cfg.n_per_split) * d.var;
      row.raw_bias = w.mean - cfg.rho;
      row.raw_bias_se = w.se;
      const auto& th = tt.per_lambda[i];
      row.v_theory = th.v_theory.at(k);
      row.bias_theory = th.bias_theory.at(k);
      rows.push_back(row);
    }
  }
  return rows;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const TheoryTable tt = theory_table(cfg);
  const auto fixed = draw_coefficients(cfg, cfg.master_seed);
  const std::size_t L = tt.lambdas.size(), R = static_cast<std::size_t>(cfg.reps), K = cfg.kinds.size();
  std::vector<ExperimentRecord> cells(L * R * K);
  parallel_for(L * R, cfg.threads, [&](std::size_t idx) {
    const std::size_t i = idx / R;
    const int j = static_cast<int>(idx % R);
    const std::uint64_t seed = cell_seed(cfg.master_seed, i, j);
    const ModelParams model = cell_model(cfg, fixed, seed);
    const CellFits cf = run_cell(cfg, model, tt.lambdas[i], seed);
    for (std::size_t q = 0; q < K; ++q) {
      const EstimatorKind k = cfg.kinds[q];
      ExperimentRecord rec;
      rec.kind = k;
      rec.split = cfg.split;
      rec.lambda = tt.lambdas[i];
      rec.rep_index = j;
      rec.seed_used = seed;
      rec.theta_raw = raw_from_stats(k, cf.stats);
      const auto& h = tt.per_lambda[i].norm.at(k);
      rec.degenerate = !h.has_value();
      if (h) rec.theta_debiased = debiased_from_stats(k, cf.stats, *h);
      cells[(q * L + i) * R + static_cast<std::size_t>(j)] = rec;
    }
  });
  ExperimentResult res;
  res.varrho_used = tt.varrho;
  res.summaries = summarize(cfg, tt, cells);
  res.records = std::move(cells);
  return res;
}

// ---- CSV ----

inline constexpr const char* kRecordsHeader =
    "kind,split,lambda,rep_index,theta_raw,theta_debiased,degenerate_flag,seed_used";
inline constexpr const char* kSummaryHeader =
    "kind,split,lambda,reps_used,bias,bias_se,n_var_emp,v_theory,bias_theory,raw_bias,raw_bias_se,degenerate_flag,"
    "boot_ratio";

inline void write_records_csv(std::ostream& o, const std::vector<ExperimentRecord>& recs) {
  o << kRecordsHeader << "\n";
  for (const auto& r : recs)
    o << to_string(r.kind) << ',' << split_count(r.split) << ',' << fmt_double(r.lambda) << ',' << r.rep_index << ','
      << fmt_double(r.theta_raw) << ',' << fmt_double(r.theta_debiased) << ',' << (r.degenerate ? 1 : 0) << ','
      << r.seed_used << "\n";
}

inline void write_summary_csv(std::ostream& o, const std::vector<SummaryRow>& rows) {
  o << kSummaryHeader << "\n";
  for (const auto& r : rows)
    o << to_string(r.kind) << ',' << split_count(r.split) << ',' << fmt_double(r.lambda) << ',' << r.reps_used << ','
      << fmt_double(r.bias) << ',' << fmt_double(r.bias_se) << ',' << fmt_double(r.n_var_emp) << ','
      << fmt_double(r.v_theory) << ',' << fmt_double(r.bias_theory) << ',' << fmt_double(r.raw_bias) << ','
      << fmt_double(r.raw_bias_se) << ',' << (r.degenerate ? 1 : 0) << ',' << fmt_double(r.boot_ratio) << "\n";
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double_field(const std::string& s) {
  if (s == "NA" || s.empty()) return kNaN;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw ConfigError("bad number '" + s + "'");
  return v;
}

inline std::vector<ExperimentRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) throw ConfigError("records.csv header mismatch");
  std::vector<ExperimentRecord> recs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw ConfigError("records.csv row has " + std::to_string(f.size()) + " fields");
    ExperimentRecord r;
    try {
      r.kind = parse_kind(f[0]);
      r.split = parse_split(std::stoi(f[1]));
      r.lambda = parse_double_field(f[2]);
      r.rep_index = std::stoi(f[3]);
      r.theta_raw = parse_double_field(f[4]);
      r.theta_debiased = parse_double_field(f[5]);
      r.degenerate = f[6] == "1";
      r.seed_used = std::stoull(f[7]);
    } catch (const std::logic_error& e) {
      throw ConfigError(std::string("records.csv: ") + e.what());
    }
    recs.push_back(r);
  }
  return recs;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw ConfigError("cannot write " + path);
  o << content;
}

// ---- type-7 quantiles ----

inline double quantile7(std::vector<double> xs, double q) {
  if (xs.empty()) return kNaN;
  std::sort(xs.begin(), xs.end());
  const double h = (static_cast<double>(xs.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

struct SixNumber {
  double min = kNaN, q1 = kNaN, median = kNaN, mean = kNaN, q3 = kNaN, max = kNaN;
  int count = 0;
};

inline SixNumber six_number(const std::vector<double>& xs) {
  SixNumber s;
  s.count = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  s.min = *std::min_element(xs.begin(), xs.end());
  s.max = *std::max_element(xs.begin(), xs.end());
  s.q1 = quantile7(xs, 0.25);
  s.median = quantile7(xs, 0.5);
  s.q3 = quantile7(xs, 0.75);
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / s.count;
  return s;
}

// ---- bootstrap validation ----

struct BootPoint {
  EstimatorKind kind = EstimatorKind::INT;
  double lambda = 0.0;
  double true_se = kNaN;
  double boot_se = kNaN;  // median over the bootstrapped outer replicates
  double ratio = kNaN;
  int clamped = 0;
};

struct BootValidation {
  std::vector<BootPoint> points;
  std::map<EstimatorKind, SixNumber> ratio_summary;
};

// True SE from cfg.reps outer replicates; bootstrap SE as the median over the
// first `boot_outer` of them.
inline BootValidation validate_bootstrap(const ExperimentConfig& cfg, int B, int boot_outer) {
  require(cfg.reps >= 2, "validate_bootstrap needs at least two outer replicates");
  require(boot_outer >= 1 && boot_outer <= cfg.reps, "boot_outer must lie in [1, reps]");
  const ExperimentResult ex = run_experiment(cfg);
  const TheoryTable tt = theory_table(cfg);
  const auto fixed = draw_coefficients(cfg, cfg.master_seed);
  const std::size_t L = tt.lambdas.size(), R = static_cast<std::size_t>(cfg.reps);
  BootValidation out;
  for (std::size_t q = 0; q < cfg.kinds.size(); ++q) {
    const EstimatorKind k = cfg.kinds[q];
    std::vector<double> ratios;
    for (std::size_t i = 0; i < L; ++i) {
      BootPoint bp;
      bp.kind = k;
      bp.lambda = tt.lambdas[i];
      const auto& h = tt.per_lambda[i].norm.at(k);
      if (!h) {
        out.points.push_back(bp);
        continue;
      }
      std::vector<double> deb(R);
      for (std::size_t j = 0; j < R; ++j) deb[j] = ex.records[(q * L + i) * R + j].theta_debiased;
      bp.true_se = std::sqrt(mean_se(deb).var);
      const DebiasPlan plan{k, cfg.split, bp.lambda, bp.lambda, tt.per_lambda[i].g, cfg.constants,
                            cfg.nr2sp_variant};
      std::vector<double> ses;
      for (int j = 0; j < boot_outer; ++j) {
        const std::uint64_t seed = cell_seed(cfg.master_seed, i, j);
        const CellFits cf = run_cell(cfg, cell_model(cfg, fixed, seed), bp.lambda, seed);
        const double rho_hat = debiased_from_stats(k, cf.stats, *h);
        const auto br = bootstrap_variance(plan, cf.fits.alpha_hat, cf.fits.beta_hat, rho_hat, cfg.n_per_split, B,
                                           substream_seed(seed, {0xB0071ULL, q}), cfg.threads);
        if (br.clamped) ++bp.clamped;
        if (!br.degenerate) ses.push_back(std::sqrt(br.variance_estimate));
      }
      bp.boot_se = quantile7(ses, 0.5);
      bp.ratio = bp.true_se / bp.boot_se;
      if (std::isfinite(bp.ratio)) ratios.push_back(bp.ratio);
      out.points.push_back(bp);
    }
    out.ratio_summary[k] = six_number(ratios);
  }
  return out;
}

// ---- probes ----

struct ProbeResult {
  double empirical = kNaN;
  double theory = kNaN;
};

// n * variance of a^T V f(Lambda) V^T b over Wishart draws, with ||a|| = u,
// ||b|| = v, a^T b = varrho.
template <class F>
ProbeResult lemma_e_probe(double u, double v, double varrho, double c, const F& f, long n, int draws,
                          std::uint64_t seed, int threads = 1) {
  require(draws >= 2, "draws must be >= 2");
  const long p = oracle_dimension(c, n);
  const auto [a, b] = make_coefficients(p, u, v, varrho, CoeffStyle::ExactGram, seed);
  std::vector<double> vals(static_cast<std::size_t>(draws));
  parallel_for(vals.size(), threads, [&](std::size_t r) {
    Engine eng = substream(seed, {0x1E44AULL, r});
    Eigen::MatrixXd X(n, p);
    NormalSource(eng).fill_matrix(X);
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
    S.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose(), 1.0 / n);
    S.triangularView<Eigen::StrictlyUpper>() = S.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    const Eigen::VectorXd va = es.eigenvectors().transpose() * a;
    const Eigen::VectorXd vb = es.eigenvectors().transpose() * b;
    double acc = 0.0;
    for (long i = 0; i < p; ++i) acc += va[i] * f(std::max(0.0, es.eigenvalues()[i])) * vb[i];
    vals[r] = acc;
  });
  ProbeResult res;
  res.empirical = static_cast<double>(n) * mean_se(vals).var;
  res.theory = bilinear_variance_limit(u, v, varrho, static_cast<double>(p) / n, f);
  return res;
}

struct MseCurvePoint {
  double lambda = 0.0;
  double mse_emp = kNaN;
  double mse_se = kNaN;
  double mse_theory = kNaN;
};

// Empirical ||alpha_hat(lambda) - alpha0||^2 across the grid, one
// eigendecomposition per replicate.
inline std::vector<MseCurvePoint> mse_curve(double c, long n, double u, const std::vector<double>& grid, int reps,
                                            std::uint64_t seed, int threads = 1) {
  check_grid(grid);
  require(reps >= 2, "reps must be >= 2");
  const long p = oracle_dimension(c, n);
  const auto coeffs = make_coefficients(p, u, u, 0.0, CoeffStyle::UniformRescaled, seed);
  const ModelParams model{coeffs.first, Eigen::VectorXd::Zero(p), 0.0};
  Eigen::MatrixXd err(reps, grid.size());
  parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
    const Dataset d = generate(model, n, substream_seed(seed, {0x35EULL, r}));
    const RidgePath path(d.X, d.a, model.alpha0);
    for (std::size_t i = 0; i < grid.size(); ++i) err(static_cast<Eigen::Index>(r), i) = path.squared_error(grid[i]);
  });
  const MpLaw law = MpLaw::from_dims(p, n);
  std::vector<MseCurvePoint> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<double> col(err.col(i).data(), err.col(i).data() + reps);
    const MeanSe m = mean_se(col);
    out[i] = {grid[i], m.mean, m.se, prediction_mse_theory(law, u, grid[i])};
  }
  return out;
}

}  // namespace ecc
