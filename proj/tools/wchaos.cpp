// Command-line runner. Five subcommands, one experiment each:
//
//   stein          Stein bound chain for named functionals
//   fourth-moment  fourth-moment CLT diagnostics along a kernel sequence
//   subordinated   bound decay for subordinated increment functionals
//   poincare       second-order Poincare inequality suite
//   multidim       multivariate normal approximation bound
//
// Every run reads a flat `key = value` config, requires an explicit seed
// (flag, WCHAOS_SEED, or config key; never the clock), and writes a CSV and
// a JSON mirror into --out. Reruns with the same config, seed, and worker
// count produce byte-identical files.
//
// Exit codes: 0 clean, 1 usage or config error, 2 when the run finishes but
// flags a violation (an empirical distance above its bound, a failed
// inequality, or a covariance mismatch).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "wchaos/fourth_moment.hpp"
#include "wchaos/io.hpp"
#include "wchaos/stein.hpp"
#include "wchaos/subordinated.hpp"

namespace {

using namespace wchaos;
namespace fs = std::filesystem;

constexpr const char* kTool = "wchaos 0.1.0";

// Per-functional substreams, so adding a functional to a file never changes
// the numbers reported for the ones before it.
constexpr std::uint64_t kTagCliStein = 0x434c4953;
constexpr std::uint64_t kTagCliPoincare = 0x434c4950;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = ".";
  bool dry_run = false;
};

void add_common(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "config file, `key = value` lines")
      ->envname("WCHAOS_CONFIG")
      ->required();
  sub->add_option("--seed", o.seed,
                  "RNG seed; required here, via WCHAOS_SEED, or as a "
                  "`seed` config key")
      ->envname("WCHAOS_SEED");
  sub->add_option("--workers", o.workers, "worker threads")
      ->envname("WCHAOS_WORKERS")
      ->check(CLI::Range(1, 256));
  sub->add_option("--out", o.out, "output directory")->envname("WCHAOS_OUT");
  sub->add_flag("--dry-run", o.dry_run, "validate inputs and report the plan "
                                        "without running or writing files");
}

std::uint64_t resolve_seed(const CLI::App* sub, const CommonOpts& o,
                           const Config& cfg) {
  if (sub->count("--seed") > 0) return o.seed;
  if (cfg.has("seed")) return cfg.get_u64("seed");
  throw std::runtime_error(
      "seed is required: pass --seed, set WCHAOS_SEED, or add `seed = <u64>` "
      "to the config");
}

// Paths in config files resolve relative to the config file itself.
std::string resolve_path(const std::string& cfg_path, const std::string& rel) {
  const fs::path p(rel);
  if (p.is_absolute()) return rel;
  return (fs::path(cfg_path).parent_path() / p).string();
}

std::vector<NamedFunctional> load_functional_file(const CommonOpts& o,
                                                  const Config& cfg,
                                                  const char* key) {
  const std::string path = resolve_path(o.config_path, cfg.get_string(key));
  return functionals_from_json(load_json_file(path), path);
}

std::uint64_t sample_count(const Config& cfg) {
  const std::uint64_t n = cfg.get_u64("n");
  if (n < 100 || n > 100'000'000) {
    throw std::runtime_error(cfg.name() +
                             ": n must lie in [100, 100000000], got " +
                             fmt_u64(n));
  }
  return n;
}

using MetaList = std::vector<std::pair<std::string, std::string>>;

MetaList meta_head(const std::string& sub, const CommonOpts& o,
                   std::uint64_t seed) {
  return {
      {"tool", kTool},
      {"subcommand", sub},
      {"config", o.config_path},
      {"seed", fmt_u64(seed)},
      {"workers", std::to_string(o.workers)},
      {"rerun", "wchaos " + sub + " --config " + o.config_path + " --seed " +
                    fmt_u64(seed) + " --workers " + std::to_string(o.workers) +
                    " --out <DIR>"},
  };
}

Json mirror_head(const std::string& sub, const CommonOpts& o,
                 std::uint64_t seed) {
  Json j = Json::object();
  j["tool"] = kTool;
  j["subcommand"] = sub;
  j["config"] = o.config_path;
  j["seed"] = seed;
  j["workers"] = o.workers;
  return j;
}

void write_outputs(const CommonOpts& o, const std::string& stem,
                   const MetaList& meta, const std::vector<std::string>& cols,
                   const std::vector<std::vector<std::string>>& rows,
                   const Json& mirror) {
  fs::create_directories(o.out);
  std::ostringstream csv;
  CsvWriter w(csv);
  for (const auto& [k, v] : meta) w.meta(k, v);
  w.header(cols);
  for (const auto& r : rows) w.row(r);
  const fs::path csv_path = fs::path(o.out) / (stem + ".csv");
  const fs::path json_path = fs::path(o.out) / (stem + ".json");
  write_text_file(csv_path.string(), csv.str());
  write_text_file(json_path.string(), mirror.dump(2) + "\n");
  std::cout << "wrote " << csv_path.string() << "\n";
  std::cout << "wrote " << json_path.string() << "\n";
}

int finish(bool flagged, const std::string& reason) {
  if (flagged) {
    std::cout << "FLAG: " << reason << "\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// stein

int run_stein(const CLI::App* sub, const CommonOpts& o) {
  const Config cfg = Config::parse_file(o.config_path);
  cfg.require_known({"seed", "n", "functional_file", "family", "kmax"});
  const std::uint64_t seed = resolve_seed(sub, o, cfg);
  const std::uint64_t n = sample_count(cfg);

  std::vector<NamedFunctional> fs;
  if (cfg.has("functional_file") && cfg.has("family")) {
    throw std::runtime_error(cfg.name() +
                             ": choose one of functional_file / family");
  } else if (cfg.has("functional_file")) {
    fs = load_functional_file(o, cfg, "functional_file");
  } else if (cfg.has("family")) {
    if (cfg.get_string("family") != "canonical") {
      throw std::runtime_error(cfg.name() + ": unknown family '" +
                               cfg.get_string("family") + "'");
    }
    const int kmax = cfg.get_int("kmax");
    if (kmax < 1 || kmax > 64) {
      throw std::runtime_error(cfg.name() + ": kmax must lie in [1, 64]");
    }
    for (int k = 1; k <= kmax; ++k) {
      fs.push_back(NamedFunctional{"canonical_k" + std::to_string(k),
                                   ChaosVector::pure(2, canonical_second_chaos(k))});
    }
  } else {
    throw std::runtime_error(cfg.name() +
                             ": need functional_file or family = canonical");
  }

  if (o.dry_run) {
    std::cout << "plan: stein bounds for " << fs.size()
              << " functional(s), n = " << n << ", seed = " << seed
              << ", workers = " << o.workers << "\n";
    for (const auto& nf : fs) {
      std::cout << "plan:   " << nf.id << " (dim " << nf.F.dim()
                << ", max order " << nf.F.max_order() << ")\n";
    }
    std::cout << "dry-run: no files written\n";
    return 0;
  }

  MetaList meta = meta_head("stein", o, seed);
  meta.emplace_back("n", fmt_u64(n));
  meta.emplace_back("violation_rule",
                    "dw > bound_w + 4 * (bound_w_stderr + dw_stderr)");

  const std::vector<std::string> cols = {
      "functional", "kind",           "mean", "variance",
      "bound_w",    "bound_w_stderr", "bound_tv", "bound_tv_stderr",
      "dw",         "dw_stderr",      "violation"};
  std::vector<std::vector<std::string>> rows;
  Json jrows = Json::array();
  bool flagged = false;

  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::uint64_t fseed = substream_seed(seed, kTagCliStein, i);
    const auto reports = stein_reports(fs[i].id, fs[i].F, n, fseed, o.workers);
    for (const BoundReport& r : reports) {
      flagged = flagged || r.violation;
      rows.push_back({r.functional, r.kind, fmt_double(r.mu),
                      fmt_double(r.sigma2), fmt_double(r.w.value),
                      fmt_double(r.w.stderr_), fmt_double(r.tv.value),
                      fmt_double(r.tv.stderr_), fmt_double(r.dw.value),
                      fmt_double(r.dw.stderr_), fmt_bool(r.violation)});
      Json jr = Json::object();
      jr["functional"] = r.functional;
      jr["kind"] = r.kind;
      jr["mean"] = r.mu;
      jr["variance"] = r.sigma2;
      jr["bound_w"] = r.w.value;
      jr["bound_w_stderr"] = r.w.stderr_;
      jr["bound_tv"] = r.tv.value;
      jr["bound_tv_stderr"] = r.tv.stderr_;
      jr["dw"] = r.dw.value;
      jr["dw_stderr"] = r.dw.stderr_;
      jr["violation"] = r.violation;
      jrows.push_back(std::move(jr));
    }
    const auto& first = reports.front();
    std::cout << fs[i].id << ": dw = " << fmt_double(first.dw.value)
              << ", first-order bound = " << fmt_double(first.w.value) << "\n";
  }

  Json mirror = mirror_head("stein", o, seed);
  mirror["n"] = n;
  mirror["rows"] = std::move(jrows);
  write_outputs(o, "stein", meta, cols, rows, mirror);
  return finish(flagged, "empirical Wasserstein distance exceeds a bound "
                         "(see the violation column)");
}

// ---------------------------------------------------------------------------
// fourth-moment

int run_fourth_moment(const CLI::App* sub, const CommonOpts& o) {
  const Config cfg = Config::parse_file(o.config_path);
  cfg.require_known({"seed", "n", "k_values", "kernel_file"});
  const std::uint64_t seed = resolve_seed(sub, o, cfg);
  const std::uint64_t n = sample_count(cfg);

  std::vector<SymTensor> kernels;
  std::vector<std::string> labels;
  if (cfg.has("k_values") && cfg.has("kernel_file")) {
    throw std::runtime_error(cfg.name() +
                             ": choose one of k_values / kernel_file");
  } else if (cfg.has("k_values")) {
    const std::vector<double> ks = cfg.get_double_list("k_values");
    if (ks.empty()) throw std::runtime_error(cfg.name() + ": empty k_values");
    int prev = 0;
    for (double kd : ks) {
      const int k = static_cast<int>(kd);
      if (kd != k || k < 1 || k > kMaxChaosDim) {
        throw std::runtime_error(cfg.name() + ": k_values entries must be "
                                              "integers in [1, " +
                                 std::to_string(kMaxChaosDim) + "]");
      }
      if (k <= prev) {
        throw std::runtime_error(cfg.name() +
                                 ": k_values must be strictly increasing");
      }
      prev = k;
      kernels.push_back(canonical_second_chaos(k));
      labels.push_back("canonical_k" + std::to_string(k));
    }
  } else if (cfg.has("kernel_file")) {
    const auto fs = load_functional_file(o, cfg, "kernel_file");
    for (const auto& nf : fs) {
      if (nf.F.terms().size() != 1) {
        throw std::runtime_error("kernel_file: functional '" + nf.id +
                                 "' must be a single pure chaos term");
      }
      kernels.push_back(nf.F.terms().begin()->second);
      labels.push_back(nf.id);
    }
  } else {
    throw std::runtime_error(cfg.name() + ": need k_values or kernel_file");
  }

  if (o.dry_run) {
    std::cout << "plan: fourth-moment diagnostics for " << kernels.size()
              << " kernel(s), n = " << n << ", seed = " << seed
              << ", workers = " << o.workers << "\n";
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      std::cout << "plan:   " << labels[i] << " (q = " << kernels[i].order()
                << ", dim " << kernels[i].dim() << ")\n";
    }
    std::cout << "dry-run: no files written\n";
    return 0;
  }

  const FourthMomentVerdict v = fm_sequence_verdict(kernels, n, seed, o.workers);

  MetaList meta = meta_head("fourth-moment", o, seed);
  meta.emplace_back("n", fmt_u64(n));
  meta.emplace_back("q", std::to_string(v.q));
  meta.emplace_back("proof_rule",
                    "d2contr2 <= proof_rhs + 4 * d2contr2_stderr");
  meta.emplace_back("violation_rule",
                    "dw > bound_w + 4 * (bound_w_stderr + dw_stderr)");
  meta.emplace_back("proof_all_hold", fmt_bool(v.proof_all_hold));
  meta.emplace_back("clt_consistent", fmt_bool(v.clt_consistent));

  std::vector<std::string> cols = {
      "label",        "index",          "q",
      "d",            "scale",          "ef2_exact",
      "ef2",          "ef2_stderr",     "ef4",
      "ef4_stderr",   "ef4_exact",      "df2_mean",
      "df2_stderr",   "var_df2",        "var_df2_stderr",
      "var_df2_exact", "d2op4",         "d2op4_stderr",
      "d2op4_exact",  "d2contr2",       "d2contr2_stderr",
      "d2contr2_exact", "proof_rhs",    "proof_holds",
      "dw",           "dw_stderr",      "bound_w",
      "bound_w_stderr"};
  const int qm1 = v.q - 1;
  for (int r = 1; r <= qm1; ++r) cols.push_back("contr_" + std::to_string(r));

  std::vector<std::vector<std::string>> rows;
  Json jrows = Json::array();
  bool dw_flag = false;
  for (std::size_t i = 0; i < v.rows.size(); ++i) {
    const FourthMomentRecord& r = v.rows[i];
    const bool dw_ok =
        r.dw.value <=
        r.bound_contr.value + 4.0 * (r.bound_contr.stderr_ + r.dw.stderr_);
    dw_flag = dw_flag || !dw_ok;
    std::vector<std::string> row = {
        labels[i],
        std::to_string(r.k),
        std::to_string(r.q),
        std::to_string(r.d),
        fmt_double(r.scale),
        fmt_double(r.ef2_exact),
        fmt_double(r.ef2.value),
        fmt_double(r.ef2.stderr_),
        fmt_double(r.ef4.value),
        fmt_double(r.ef4.stderr_),
        fmt_double(r.ef4_exact),
        fmt_double(r.df2_mean.value),
        fmt_double(r.df2_mean.stderr_),
        fmt_double(r.var_df2.value),
        fmt_double(r.var_df2.stderr_),
        fmt_double(r.var_df2_exact),
        fmt_double(r.e_d2op4.value),
        fmt_double(r.e_d2op4.stderr_),
        fmt_double(r.e_d2op4_exact),
        fmt_double(r.e_d2contr2.value),
        fmt_double(r.e_d2contr2.stderr_),
        fmt_double(r.e_d2contr2_exact),
        fmt_double(v.proof_rhs[i]),
        fmt_bool(v.proof_holds[i]),
        fmt_double(r.dw.value),
        fmt_double(r.dw.stderr_),
        fmt_double(r.bound_contr.value),
        fmt_double(r.bound_contr.stderr_)};
    for (int c = 0; c < qm1; ++c) {
      row.push_back(c < static_cast<int>(r.contraction_norms.size())
                        ? fmt_double(r.contraction_norms[c])
                        : "");
    }
    rows.push_back(std::move(row));

    Json jr = Json::object();
    jr["label"] = labels[i];
    jr["index"] = r.k;
    jr["q"] = r.q;
    jr["d"] = r.d;
    jr["scale"] = r.scale;
    jr["ef2_exact"] = r.ef2_exact;
    jr["ef2"] = r.ef2.value;
    jr["ef2_stderr"] = r.ef2.stderr_;
    jr["ef4"] = r.ef4.value;
    jr["ef4_stderr"] = r.ef4.stderr_;
    jr["ef4_exact"] = r.ef4_exact;
    jr["df2_mean"] = r.df2_mean.value;
    jr["df2_stderr"] = r.df2_mean.stderr_;
    jr["var_df2"] = r.var_df2.value;
    jr["var_df2_stderr"] = r.var_df2.stderr_;
    jr["var_df2_exact"] = r.var_df2_exact;
    jr["d2op4"] = r.e_d2op4.value;
    jr["d2op4_stderr"] = r.e_d2op4.stderr_;
    jr["d2op4_exact"] = r.e_d2op4_exact;
    jr["d2contr2"] = r.e_d2contr2.value;
    jr["d2contr2_stderr"] = r.e_d2contr2.stderr_;
    jr["d2contr2_exact"] = r.e_d2contr2_exact;
    jr["proof_rhs"] = v.proof_rhs[i];
    jr["proof_holds"] = static_cast<bool>(v.proof_holds[i]);
    jr["dw"] = r.dw.value;
    jr["dw_stderr"] = r.dw.stderr_;
    jr["bound_w"] = r.bound_contr.value;
    jr["bound_w_stderr"] = r.bound_contr.stderr_;
    jr["contraction_norms"] = r.contraction_norms;
    jrows.push_back(std::move(jr));

    std::cout << labels[i] << ": EF^4 = " << fmt_double(r.ef4.value)
              << ", dw = " << fmt_double(r.dw.value)
              << ", bound = " << fmt_double(r.bound_contr.value) << "\n";
  }

  Json mirror = mirror_head("fourth-moment", o, seed);
  mirror["n"] = n;
  mirror["verdict"] = Json{{"q", v.q},
                           {"proof_all_hold", v.proof_all_hold},
                           {"trend_ef4", v.trend_ef4},
                           {"trend_contr", v.trend_contr},
                           {"trend_var_df2", v.trend_var_df2},
                           {"trend_d2op4", v.trend_d2op4},
                           {"trend_d2contr2", v.trend_d2contr2},
                           {"clt_consistent", v.clt_consistent}};
  mirror["rows"] = std::move(jrows);
  write_outputs(o, "fourth_moment", meta, cols, rows, mirror);

  std::cout << "proof_all_hold = " << fmt_bool(v.proof_all_hold)
            << ", clt_consistent = " << fmt_bool(v.clt_consistent) << "\n";
  return finish(!v.proof_all_hold || dw_flag,
                !v.proof_all_hold
                    ? "hessian contraction proof bound failed"
                    : "empirical Wasserstein distance exceeds the "
                      "contraction bound");
}

// ---------------------------------------------------------------------------
// subordinated

int run_subordinated(const CLI::App* sub, const CommonOpts& o) {
  const Config cfg = Config::parse_file(o.config_path);
  cfg.require_known({"seed", "hurst", "a", "b", "t_grid", "delta", "replicas",
                     "f_coeffs"});
  const std::uint64_t seed = resolve_seed(sub, o, cfg);

  const std::vector<double> coeffs = cfg.get_double_list("f_coeffs");
  if (coeffs.empty()) {
    throw std::runtime_error(cfg.name() + ": f_coeffs must be a non-empty "
                                          "list of Hermite coefficients");
  }

  SubordinatedConfig sc;
  sc.model = fbm_model(cfg.get_double("hurst"));
  sc.f = HermiteCoeffs{static_cast<int>(coeffs.size()) - 1, coeffs};
  sc.a = cfg.get_double_or("a", 0.0);
  sc.b = cfg.get_double_or("b", 1.0);
  sc.t_grid = cfg.get_double_list("t_grid");
  sc.delta = cfg.get_double_or("delta", 0.125);
  sc.replicas = cfg.get_int_or("replicas", 2000);
  sc.seed = seed;
  sc.workers = o.workers;
  sc.validate();

  if (o.dry_run) {
    std::cout << "plan: subordinated rate study, hurst = "
              << fmt_double(sc.model.hurst) << ", window = ("
              << fmt_double(sc.a) << ", " << fmt_double(sc.b)
              << "), delta = " << fmt_double(sc.delta)
              << ", replicas = " << sc.replicas << ", seed = " << seed
              << ", workers = " << o.workers << "\n";
    for (double t : sc.t_grid) {
      std::cout << "plan:   T = " << fmt_double(t) << " ("
                << fmt_double((sc.b - sc.a) * t / sc.delta)
                << " grid points)\n";
    }
    std::cout << "dry-run: no files written\n";
    return 0;
  }

  const RateStudy rs = rate_study(sc);

  MetaList meta = meta_head("subordinated", o, seed);
  meta.emplace_back("hurst", fmt_double(sc.model.hurst));
  meta.emplace_back("window", fmt_double(sc.a) + ".." + fmt_double(sc.b));
  meta.emplace_back("delta", fmt_double(sc.delta));
  meta.emplace_back("replicas", std::to_string(sc.replicas));
  meta.emplace_back("sigma2_limit", fmt_double(rs.sigma2.value));
  meta.emplace_back("sigma2_error", fmt_double(rs.sigma2.error));
  meta.emplace_back("i3", fmt_double(rs.i3.value));
  meta.emplace_back("i3_error", fmt_double(rs.i3.error));
  meta.emplace_back("fprime4", fmt_double(rs.fp4));
  meta.emplace_back("fsecond4", fmt_double(rs.fpp4));
  meta.emplace_back("slope_dw", fmt_double(rs.slope_dw));
  meta.emplace_back("slope_bound", fmt_double(rs.slope_bound));
  meta.emplace_back("domination_rule",
                    "dw <= bound_w + 4 * (dw_stderr + bound_w_stderr) at "
                    "every T");
  meta.emplace_back("dominated", fmt_bool(rs.dominated));

  const std::vector<std::string> cols = {
      "t",        "grid_points", "jitter",  "var_emp", "var_emp_stderr",
      "var_grid", "dw",       "dw_stderr", "bound_w", "bound_w_stderr",
      "grad_term", "hess_term"};
  std::vector<std::vector<std::string>> rows;
  Json jrows = Json::array();
  for (const RateRow& r : rs.rows) {
    rows.push_back({fmt_double(r.t), fmt_u64(r.grid_points),
                    fmt_double(r.jitter), fmt_double(r.var_emp),
                    fmt_double(r.var_emp_stderr), fmt_double(r.var_grid),
                    fmt_double(r.dw), fmt_double(r.dw_stderr),
                    fmt_double(r.bound_w), fmt_double(r.bound_w_stderr),
                    fmt_double(r.grad_term), fmt_double(r.hess_term)});
    Json jr = Json::object();
    jr["t"] = r.t;
    jr["grid_points"] = r.grid_points;
    jr["jitter"] = r.jitter;
    jr["var_emp"] = r.var_emp;
    jr["var_emp_stderr"] = r.var_emp_stderr;
    jr["var_grid"] = r.var_grid;
    jr["dw"] = r.dw;
    jr["dw_stderr"] = r.dw_stderr;
    jr["bound_w"] = r.bound_w;
    jr["bound_w_stderr"] = r.bound_w_stderr;
    jr["grad_term"] = r.grad_term;
    jr["hess_term"] = r.hess_term;
    jrows.push_back(std::move(jr));
    std::cout << "T = " << fmt_double(r.t) << ": dw = " << fmt_double(r.dw)
              << ", bound = " << fmt_double(r.bound_w) << "\n";
  }

  Json mirror = mirror_head("subordinated", o, seed);
  mirror["summary"] = Json{{"hurst", sc.model.hurst},
                           {"a", sc.a},
                           {"b", sc.b},
                           {"delta", sc.delta},
                           {"replicas", sc.replicas},
                           {"sigma2_limit", rs.sigma2.value},
                           {"sigma2_error", rs.sigma2.error},
                           {"i3", rs.i3.value},
                           {"i3_error", rs.i3.error},
                           {"fprime4", rs.fp4},
                           {"fsecond4", rs.fpp4},
                           {"slope_dw", rs.slope_dw},
                           {"slope_bound", rs.slope_bound},
                           {"dominated", rs.dominated}};
  mirror["rows"] = std::move(jrows);
  write_outputs(o, "subordinated", meta, cols, rows, mirror);

  std::cout << "slope(dw) = " << fmt_double(rs.slope_dw)
            << ", slope(bound) = " << fmt_double(rs.slope_bound)
            << ", dominated = " << fmt_bool(rs.dominated) << "\n";
  return finish(!rs.dominated,
                "empirical distance exceeds the bound at some T");
}

// ---------------------------------------------------------------------------
// poincare

int run_poincare(const CLI::App* sub, const CommonOpts& o) {
  const Config cfg = Config::parse_file(o.config_path);
  cfg.require_known({"seed", "n", "p", "functional_file"});
  const std::uint64_t seed = resolve_seed(sub, o, cfg);
  const std::uint64_t n = sample_count(cfg);
  const int p = cfg.get_int("p");
  const auto fs = load_functional_file(o, cfg, "functional_file");

  if (o.dry_run) {
    std::cout << "plan: poincare suite, p = " << p << ", " << fs.size()
              << " functional(s), n = " << n << ", seed = " << seed
              << ", workers = " << o.workers << "\n";
    std::cout << "dry-run: no files written\n";
    return 0;
  }

  MetaList meta = meta_head("poincare", o, seed);
  meta.emplace_back("n", fmt_u64(n));
  meta.emplace_back("p", std::to_string(p));
  meta.emplace_back("holds_rule",
                    "lhs <= factor-scaled rhs + 4 * (lhs_stderr + rhs_stderr)");

  const std::vector<std::string> cols = {"functional", "inequality",
                                         "lhs",        "lhs_stderr",
                                         "factor",     "rhs",
                                         "rhs_stderr", "holds"};
  std::vector<std::vector<std::string>> rows;
  Json jrows = Json::array();
  bool flagged = false;

  for (std::size_t i = 0; i < fs.size(); ++i) {
    const std::uint64_t fseed = substream_seed(seed, kTagCliPoincare, i);
    const PoincareReport rep = poincare_suite(fs[i].F, p, n, fseed, o.workers);
    const struct {
      const char* name;
      const PoincareRow* row;
      double factor;
    } lines[] = {{"inverse_gradient", &rep.a, 1.0},
                 {"inverse_hessian_opnorm", &rep.b, rep.factor_b},
                 {"moment", &rep.c, rep.factor_c}};
    for (const auto& l : lines) {
      flagged = flagged || !l.row->holds;
      rows.push_back({fs[i].id, l.name, fmt_double(l.row->lhs),
                      fmt_double(l.row->lhs_stderr), fmt_double(l.factor),
                      fmt_double(l.row->rhs), fmt_double(l.row->rhs_stderr),
                      fmt_bool(l.row->holds)});
      Json jr = Json::object();
      jr["functional"] = fs[i].id;
      jr["inequality"] = l.name;
      jr["lhs"] = l.row->lhs;
      jr["lhs_stderr"] = l.row->lhs_stderr;
      jr["factor"] = l.factor;
      jr["rhs"] = l.row->rhs;
      jr["rhs_stderr"] = l.row->rhs_stderr;
      jr["holds"] = l.row->holds;
      jrows.push_back(std::move(jr));
    }
    std::cout << fs[i].id << ": holds = " << fmt_bool(rep.a.holds) << "/"
              << fmt_bool(rep.b.holds) << "/" << fmt_bool(rep.c.holds)
              << "\n";
  }

  Json mirror = mirror_head("poincare", o, seed);
  mirror["n"] = n;
  mirror["p"] = p;
  mirror["rows"] = std::move(jrows);
  write_outputs(o, "poincare", meta, cols, rows, mirror);
  return finish(flagged, "a Poincare-type inequality failed its 4-sigma "
                         "tolerance");
}

// ---------------------------------------------------------------------------
// multidim

int run_multidim(const CLI::App* sub, const CommonOpts& o) {
  const Config cfg = Config::parse_file(o.config_path);
  cfg.require_known({"seed", "n", "functional_file", "covariance"});
  const std::uint64_t seed = resolve_seed(sub, o, cfg);
  const std::uint64_t n = sample_count(cfg);
  const auto fs = load_functional_file(o, cfg, "functional_file");
  if (fs.size() < 2) {
    throw std::runtime_error(cfg.name() +
                             ": multidim needs at least 2 functionals");
  }

  const auto m = static_cast<Eigen::Index>(fs.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(m, m);
  if (cfg.has("covariance")) {
    const std::string raw = cfg.get_string("covariance");
    if (!raw.empty() && raw.front() == '[') {
      const std::vector<double> vals = cfg.get_double_list("covariance");
      if (static_cast<Eigen::Index>(vals.size()) != m * m) {
        throw std::runtime_error(
            cfg.name() + ": covariance needs " + std::to_string(m * m) +
            " row-major entries, got " + std::to_string(vals.size()));
      }
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) C(i, j) = vals[i * m + j];
    } else if (raw != "identity") {
      throw std::runtime_error(cfg.name() +
                               ": covariance must be \"identity\" or a "
                               "row-major [..] list");
    }
  }

  if (o.dry_run) {
    std::cout << "plan: multidim bound for " << fs.size()
              << " functionals, n = " << n << ", seed = " << seed
              << ", workers = " << o.workers << "\n";
    std::cout << "dry-run: no files written\n";
    return 0;
  }

  std::vector<ChaosVector> Fs;
  Fs.reserve(fs.size());
  std::string ids;
  for (const auto& nf : fs) {
    Fs.push_back(nf.F);
    if (!ids.empty()) ids += '+';
    ids += nf.id;
  }

  const MultidimReport rep = multidim_bound(Fs, C, n, seed, o.workers);

  MetaList meta = meta_head("multidim", o, seed);
  meta.emplace_back("n", fmt_u64(n));
  meta.emplace_back("cov_warning_rule",
                    "flags when an empirical covariance entry differs from "
                    "the target by more than 4 stderr");

  const std::vector<std::string> cols = {
      "functionals", "d",        "bound",    "bound_stderr",
      "cov_opnorm",  "covinv_opnorm", "sum_hess", "sum_grad",
      "cov_warning"};
  const std::vector<std::vector<std::string>> rows = {
      {ids, std::to_string(fs.size()), fmt_double(rep.bound),
       fmt_double(rep.bound_stderr), fmt_double(rep.c_op),
       fmt_double(rep.cinv_op), fmt_double(rep.sum_hess),
       fmt_double(rep.sum_grad), fmt_bool(rep.cov_warning)}};

  Json jr = Json::object();
  jr["functionals"] = ids;
  jr["d"] = fs.size();
  jr["bound"] = rep.bound;
  jr["bound_stderr"] = rep.bound_stderr;
  jr["cov_opnorm"] = rep.c_op;
  jr["covinv_opnorm"] = rep.cinv_op;
  jr["sum_hess"] = rep.sum_hess;
  jr["sum_grad"] = rep.sum_grad;
  jr["cov_warning"] = rep.cov_warning;

  Json mirror = mirror_head("multidim", o, seed);
  mirror["n"] = n;
  mirror["rows"] = Json::array({std::move(jr)});
  write_outputs(o, "multidim", meta, cols, rows, mirror);

  std::cout << "bound = " << fmt_double(rep.bound)
            << ", cov_warning = " << fmt_bool(rep.cov_warning) << "\n";
  return finish(rep.cov_warning,
                "empirical covariance disagrees with the configured target");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stein bounds and fourth-moment diagnostics for Wiener chaos"};
  app.require_subcommand(1);

  CommonOpts o_stein, o_fm, o_sub, o_poi, o_multi;
  CLI::App* c_stein =
      app.add_subcommand("stein", "bound chain for named functionals");
  add_common(c_stein, o_stein);
  CLI::App* c_fm = app.add_subcommand(
      "fourth-moment", "CLT diagnostics along a kernel sequence");
  add_common(c_fm, o_fm);
  CLI::App* c_sub = app.add_subcommand(
      "subordinated", "bound decay for subordinated increment functionals");
  add_common(c_sub, o_sub);
  CLI::App* c_poi =
      app.add_subcommand("poincare", "second-order Poincare inequalities");
  add_common(c_poi, o_poi);
  CLI::App* c_multi = app.add_subcommand(
      "multidim", "multivariate normal approximation bound");
  add_common(c_multi, o_multi);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (c_stein->parsed()) return run_stein(c_stein, o_stein);
    if (c_fm->parsed()) return run_fourth_moment(c_fm, o_fm);
    if (c_sub->parsed()) return run_subordinated(c_sub, o_sub);
    if (c_poi->parsed()) return run_poincare(c_poi, o_poi);
    if (c_multi->parsed()) return run_multidim(c_multi, o_multi);
  } catch (const std::exception& e) {
    std::cerr << "wchaos: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
