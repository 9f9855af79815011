// Batch driver: every experiment as a subcommand with seeded, reproducible,
// machine-readable outputs. Timestamps go to the sidecar log only, so output
// files are byte-identical for identical configs.
#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>

#include "cklab/io.hpp"
#include "cklab/tan_example.hpp"

using namespace cklab;

namespace {

struct CommonOpts {
  std::string out = "out";
  std::uint64_t seed = 1;
  bool plot = false;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--seed", c.seed, "rng seed");
  cmd->add_flag("--plot", c.plot, "also emit SVG figures (never affects the exit code)");
}

void sidecar_log(const std::filesystem::path& dir, const std::string& what) {
  std::ofstream log(dir / "run.log", std::ios::app);
  const auto now = std::chrono::system_clock::now();
  log << std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count() << " "
      << what << "\n";
}

// Resolved configuration echoed into every output file.
std::string config_echo(CLI::App* cmd) { return cmd->config_to_str(true, false); }

std::string as_comment(const std::string& block) {
  std::string out;
  size_t pos = 0;
  while (pos < block.size()) {
    size_t nl = block.find('\n', pos);
    if (nl == std::string::npos) nl = block.size();
    out += "# " + block.substr(pos, nl - pos) + "\n";
    pos = nl + 1;
  }
  return out;
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    if (ch == '"' || ch == '\\')
      out += std::string("\\") + ch;
    else if (ch == '\n')
      out += "\\n";
    else
      out += ch;
  }
  return out;
}

std::vector<double> parse_scales(const std::string& csv) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= csv.size()) {
    size_t comma = csv.find(',', pos);
    if (comma == std::string::npos) comma = csv.size();
    std::string tok = csv.substr(pos, comma - pos);
    if (!tok.empty()) out.push_back(parse_scale(tok));
    pos = comma + 1;
  }
  return out;
}

Vec vec_from_csv(const std::string& csv) {
  auto nums = parse_number_list(csv);
  Vec v(nums.size());
  for (size_t i = 0; i < nums.size(); ++i) v[i] = nums[i];
  return v;
}

struct PhasePick {
  std::string name = "rest";
  int n = 3;
  std::string file;  // user phase TOML

  PhaseSpec make() const {
    if (name == "user") {
      if (file.empty()) throw CLI::ValidationError("--phase user needs --phase-file");
      return load_user_phase(file);
    }
    return phase_by_name(name, n);
  }
};

void add_phase_opts(CLI::App* cmd, PhasePick& p) {
  cmd->add_option("--phase", p.name, "rest | br | worst | tan | user");
  cmd->add_option("--n", p.n, "ambient dimension");
  cmd->add_option("--phase-file", p.file, "TOML description of a user phase");
}

int threads_cap() {
  const char* env = std::getenv("CK_LAB_THREADS");
  return env ? std::max(1, std::atoi(env)) : 1;
}

// ---- subcommand bodies ----

int run_check(CLI::App* cmd, const PhasePick& pick, const CommonOpts& common, int samples,
              double tol, double fail_threshold, double t_max, const std::string& expect) {
  PhaseSpec phase = pick.make();
  DirLock lock(common.out);
  sidecar_log(common.out, "check phase=" + pick.name);

  auto pts = sample_domain(phase, samples, common.seed);
  const int n = phase.n();
  if (t_max > 0.0) {
    const Box& bm = phase.box_m();
    const double c = 0.5 * (bm.lo[n - 1] + bm.hi[n - 1]), h = 0.5 * (bm.hi[n - 1] - bm.lo[n - 1]);
    for (auto& p : pts) p.t = c + (p.t - c) * (t_max / h);
  }

  std::string csv = as_comment(config_echo(cmd)) + report_csv_header(n);
  bool all_pass = true, all_fail = true;
  for (const auto& p : pts) {
    ConditionReport r = check_bourgain(phase, p.x, p.t, p.xi, tol);
    csv += report_csv_row(r);
    all_pass = all_pass && r.bourgain_residual <= tol;
    all_fail = all_fail && r.bourgain_residual >= fail_threshold;
  }
  write_text(std::filesystem::path(common.out) / "check.csv", csv);
  const bool ok = (expect == "fail") ? all_fail : all_pass;
  return ok ? 0 : 1;
}

int run_abc_verify(CLI::App* cmd, const PhasePick& pick, const CommonOpts& common, int samples,
                   double tol) {
  PhaseSpec phase = pick.make();
  ABCData abc = canonical_abc(phase);
  DirLock lock(common.out);
  sidecar_log(common.out, "abc-verify phase=" + pick.name);

  std::string csv = as_comment(config_echo(cmd)) +
                    csv_row({"t", "residual", "det_b", "gc_derivative"});
  bool ok = true;
  for (const auto& p : sample_domain(phase, samples, common.seed)) {
    AbcCheck chk = check_abc(phase, abc, p.x, p.t, p.xi);
    csv += csv_row({fmt(p.t), fmt(chk.residual), fmt(chk.det_b), fmt(chk.gc_derivative)});
    ok = ok && chk.residual <= tol;
  }
  write_text(std::filesystem::path(common.out) / "abc.csv", csv);
  return ok ? 0 : 1;
}

int run_trace(CLI::App* cmd, const PhasePick& pick, const CommonOpts& common,
              const std::string& xi_csv, const std::string& v_csv, int t_count) {
  PhaseSpec phase = pick.make();
  DirLock lock(common.out);
  sidecar_log(common.out, "trace phase=" + pick.name);

  const int n = phase.n();
  Vec xi = vec_from_csv(xi_csv), v = vec_from_csv(v_csv);
  if (xi.size() != n - 1 || v.size() != n - 1)
    throw CLI::ValidationError("--xi and --v need n-1 components");
  std::vector<double> tg(t_count);
  const Box& bm = phase.box_m();
  for (int i = 0; i < t_count; ++i)
    tg[i] = bm.lo[n - 1] + (bm.hi[n - 1] - bm.lo[n - 1]) * i / (t_count - 1);
  CurveSample cs = trace_curve(phase, xi, v, tg);

  std::string csv = as_comment(config_echo(cmd));
  std::vector<std::string> head{"t"};
  for (int i = 0; i + 1 < n; ++i) head.push_back("x" + std::to_string(i));
  csv += csv_row(head);
  for (size_t i = 0; i < tg.size(); ++i) {
    std::vector<std::string> cells{fmt(tg[i])};
    for (int j = 0; j + 1 < n; ++j) cells.push_back(fmt(cs.points[i][j]));
    csv += csv_row(cells);
  }
  write_text(std::filesystem::path(common.out) / "trace.csv", csv);
  if (common.plot) try {
      std::vector<double> xs(tg.begin(), tg.end()), ys;
      for (const auto& p : cs.points) ys.push_back(p[0]);
      write_text(std::filesystem::path(common.out) / "trace.svg",
                 svg_polyline(xs, ys, "t", "x0"));
    } catch (...) {
    }
  return 0;
}

int run_straighten(CLI::App* cmd, const PhasePick& pick, const CommonOpts& common,
                   const std::string& anchor_xi, const std::string& anchor_v, bool naive,
                   double band_lo, double band_hi, int samples_per_radius) {
  PhaseSpec phase = pick.make();
  DirLock lock(common.out);
  sidecar_log(common.out, "straighten phase=" + pick.name);

  const int m = phase.n() - 1;
  Vec xi0 = anchor_xi.empty() ? Vec::Zero(m) : vec_from_csv(anchor_xi);
  Vec v0 = anchor_v.empty() ? Vec::Zero(m) : vec_from_csv(anchor_v);
  auto radii = default_radius_ladder();

  FitReport fit;
  if (pick.name == "worst" && !naive) {
    fit = fit_error_order_view(worst_explicit_map(), phase, xi0, v0, radii, samples_per_radius,
                               common.seed);
  } else if (naive) {
    ABCData data;
    data.A = [m](const Vec&, const Vec&) { return Mat::Zero(m, m).eval(); };
    data.B = [m](const Vec&, const Vec&) { return Mat::Identity(m, m).eval(); };
    data.c = [](const Vec&, double t, const Vec&) { return t; };
    fit = fit_error_order(phase, data, xi0, v0, radii, samples_per_radius, common.seed,
                          /*validate=*/false);
  } else {
    fit = fit_error_order(phase, canonical_abc(phase), xi0, v0, radii, samples_per_radius,
                          common.seed);
  }

  std::string json = "{\n  \"config\": \"" + json_escape(config_echo(cmd)) + "\",\n";
  json += "  \"anchor_xi\": [" + fmt_vec(xi0, ',') + "],\n  \"anchor_v\": [" + fmt_vec(v0, ',') +
          "],\n  \"exact\": " + (fit.exact ? "true" : "false") + ",\n  \"slope\": " +
          fmt(fit.slope) + ",\n  \"intercept\": " + fmt(fit.intercept) + ",\n  \"r2\": " +
          fmt(fit.r2) + ",\n  \"radii\": [";
  for (size_t i = 0; i < fit.radii.size(); ++i)
    json += (i ? "," : "") + fmt(fit.radii[i]);
  json += "],\n  \"max_errors\": [";
  for (size_t i = 0; i < fit.max_errors.size(); ++i)
    json += (i ? "," : "") + fmt(fit.max_errors[i]);
  json += "]\n}\n";
  write_text(std::filesystem::path(common.out) / "straighten.json", json);
  if (common.plot && !fit.exact) try {
      write_text(std::filesystem::path(common.out) / "straighten.svg",
                 svg_loglog(fit.radii, fit.max_errors, "radius", "max error"));
    } catch (...) {
    }
  return (fit.exact || (fit.slope >= band_lo && fit.slope <= band_hi)) ? 0 : 1;
}

int run_tan(CLI::App* cmd, const CommonOpts& common, int n, double t0, const std::string& p_csv,
            int levels) {
  DirLock lock(common.out);
  sidecar_log(common.out, "tan-coniness");

  Vec p2 = vec_from_csv(p_csv);
  if (p2.size() != 2) throw CLI::ValidationError("--p needs two components");
  std::string json = "{\n  \"config\": \"" + json_escape(config_echo(cmd)) +
                     "\",\n  \"runs\": [\n";
  std::vector<double> ps, dets;
  bool ok = true;
  for (int k = 0; k < levels; ++k) {
    TanConfig cfg;
    cfg.n = n;
    cfg.t0 = t0;
    cfg.p = Vec::Zero(n - 1);
    cfg.p[n - 3] = p2[0] / std::pow(2.0, k);
    cfg.p[n - 2] = p2[1] / std::pow(2.0, k);
    ConinessResult r = coniness_det(cfg);
    ps.push_back(std::abs(cfg.p[n - 2]));
    dets.push_back(r.det);
    json += std::string(k ? ",\n" : "") + "    {\"p_last\": " + fmt(cfg.p[n - 2]) +
            ", \"det\": " + fmt(r.det) + ", \"leading\": " + fmt(r.leading) +
            ", \"rel_err\": " + fmt(r.rel_err) + "}";
    ok = ok && r.det > 0.0 && (k > 0 || r.rel_err <= 0.1);
  }
  json += "\n  ]\n}\n";
  write_text(std::filesystem::path(common.out) / "coniness.json", json);
  if (common.plot) try {
      write_text(std::filesystem::path(common.out) / "coniness.svg",
                 svg_loglog(ps, dets, "|p|", "det"));
    } catch (...) {
    }
  return ok ? 0 : 1;
}

int run_sk(CLI::App* cmd, const PhasePick& pick, const CommonOpts& common,
           const std::string& delta_s, const std::string& mode_s, double eta, int grid_res) {
  PhaseSpec phase = pick.make();
  DirLock lock(common.out);
  sidecar_log(common.out, "tubes sk-run");

  const double delta = parse_scale(delta_s);
  StickyMode mode;
  if (mode_s == "grid")
    mode = StickyMode::grid;
  else if (mode_s == "cantor")
    mode = StickyMode::cantor;
  else
    throw CLI::ValidationError("--mode must be grid or cantor");

  TubeFamily fam = make_sticky_family(phase, delta, mode, common.seed);
  SkReport rep = sk_experiment(fam, eta, {}, grid_res);

  write_text(std::filesystem::path(common.out) / "family.jsonl", tube_family_jsonl(fam));
  std::string json = "{\n  \"config\": \"" + json_escape(config_echo(cmd)) + "\",\n";
  json += "  \"members\": " + std::to_string(fam.size()) + ",\n  \"distinct_ok\": " +
          (rep.distinct_ok ? "true" : "false") + ",\n  \"scales\": [\n";
  for (size_t i = 0; i < rep.scales.size(); ++i) {
    const auto& s = rep.scales[i];
    json += std::string(i ? ",\n" : "") + "    {\"rho\": " + fmt(s.rho) +
            ", \"cover_size\": " + std::to_string(s.cover_size) +
            ", \"max_parallel\": " + std::to_string(s.max_parallel) +
            ", \"threshold\": " + fmt(s.threshold) + ", \"ok\": " + (s.ok ? "true" : "false") +
            "}";
  }
  json += "\n  ],\n  \"parallel_ok\": " + std::string(rep.parallel_ok ? "true" : "false") +
          ",\n  \"mass\": " + fmt(rep.mass) + ",\n  \"mass_threshold\": " +
          fmt(rep.mass_threshold) + ",\n  \"mass_ok\": " +
          (rep.mass_ok ? "true" : "false") + ",\n  \"union_volume\": " + fmt(rep.union_vol) +
          ",\n  \"eps_hat\": " + fmt(rep.eps_hat) + "\n}\n";
  write_text(std::filesystem::path(common.out) / "sk_report.json", json);

  if (common.plot) try {
      // Slice rendering at the origin height: tube centers as circles.
      const int n = phase.n();
      const double t = phase.origin_t();
      std::vector<double> xs, ys;
      for (const auto& mem : fam.members) {
        CurveSample cs = trace_curve(phase, mem.tube.param.xi, mem.tube.param.v, {t});
        xs.push_back(cs.points[0][0]);
        ys.push_back(cs.points[0][n == 2 ? 0 : 1]);
      }
      write_text(std::filesystem::path(common.out) / "slice.svg",
                 svg_polyline(xs, ys, "x0", "x1"));
    } catch (...) {
    }
  return rep.pass() ? 0 : 1;
}

int run_rescale(CLI::App* cmd, const PhasePick& pick, const CommonOpts& common,
                const std::string& ladder_s, const std::string& anchor_v, int children,
                int grid_res) {
  PhaseSpec phase = pick.make();
  ABCData abc = canonical_abc(phase);
  DirLock lock(common.out);
  sidecar_log(common.out, "tubes rescale-check");

  const int m = phase.n() - 1;
  Vec v0 = anchor_v.empty() ? Vec::Zero(m) : vec_from_csv(anchor_v);
  auto ladder = parse_scales(ladder_s);

  std::string json = "{\n  \"config\": \"" + json_escape(config_echo(cmd)) +
                     "\",\n  \"runs\": [\n";
  std::vector<double> ratios;
  bool jac_ok = true;
  for (size_t k = 0; k < ladder.size(); ++k) {
    const double rho = ladder[k];
    Tube parent{{Vec::Zero(m), v0}, rho};
    TubeFamily kids;
    kids.delta = rho * rho;
    kids.phase = phase;
    std::mt19937_64 rng(common.seed);  // same directions at every scale
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Shading full = Shading::full(phase);
    for (int i = 0; i < children; ++i) {
      Vec g(2 * m);
      for (int j = 0; j < 2 * m; ++j) g[j] = u(rng);
      g *= 0.8 * rho / g.cwiseAbs().sum();
      kids.members.push_back({Tube{{g.head(m), v0 + g.tail(m)}, kids.delta}, full});
    }
    RescaleResult r = rescale_within(parent, phase, abc, kids, grid_res);
    ratios.push_back(r.max_line_deviation / rho);
    jac_ok = jac_ok && std::abs(r.jacobian_ratio - 1.0) <= 0.15;
    json += std::string(k ? ",\n" : "") + "    {\"rho\": " + fmt(rho) + ", \"deviation\": " +
            fmt(r.max_line_deviation) + ", \"deviation_over_rho\": " + fmt(ratios.back()) +
            ", \"jacobian_ratio\": " + fmt(r.jacobian_ratio) + "}";
  }
  const double lo = *std::min_element(ratios.begin(), ratios.end());
  const double hi = *std::max_element(ratios.begin(), ratios.end());
  const bool stable = hi <= 2.0 * lo;
  json += "\n  ],\n  \"deviation_ratio_spread\": " + fmt(hi / lo) +
          ",\n  \"stable\": " + (stable ? "true" : "false") +
          ",\n  \"jacobian_ok\": " + (jac_ok ? "true" : "false") + "\n}\n";
  write_text(std::filesystem::path(common.out) / "rescale_report.json", json);
  return (stable && jac_ok) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical experiments on curved-tube geometry"};
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  (void)threads_cap();  // parallelism cap, recorded for future use

  // check
  auto* check = app.add_subcommand("check", "pointwise condition checks over sampled points");
  PhasePick check_phase;
  CommonOpts check_common;
  int check_samples = 200;
  double check_tol = 1e-6, check_fail = 0.1, check_tmax = 0.0;
  std::string check_expect = "pass";
  add_phase_opts(check, check_phase);
  add_common(check, check_common);
  check->add_option("--samples", check_samples);
  check->add_option("--tol", check_tol, "pass threshold on the residual");
  check->add_option("--fail-threshold", check_fail, "fail threshold on the residual");
  check->add_option("--t-max", check_tmax, "restrict |t - t_center| when positive");
  check->add_option("--expect", check_expect)->check(CLI::IsMember({"pass", "fail"}));

  // abc-verify
  auto* abcv = app.add_subcommand("abc-verify", "Hessian decomposition identities");
  PhasePick abc_phase;
  CommonOpts abc_common;
  int abc_samples = 100;
  double abc_tol = 1e-9;
  add_phase_opts(abcv, abc_phase);
  add_common(abcv, abc_common);
  abcv->add_option("--samples", abc_samples);
  abcv->add_option("--tol", abc_tol);

  // trace
  auto* trace = app.add_subcommand("trace", "trace one curve and export it");
  PhasePick trace_phase;
  CommonOpts trace_common;
  std::string trace_xi = "0,0", trace_v = "0,0";
  int trace_count = 41;
  add_phase_opts(trace, trace_phase);
  add_common(trace, trace_common);
  trace->add_option("--xi", trace_xi);
  trace->add_option("--v", trace_v);
  trace->add_option("--t-count", trace_count);

  // straighten
  auto* str = app.add_subcommand("straighten", "error-order fit of the straightening map");
  PhasePick str_phase;
  CommonOpts str_common;
  std::string str_xi0, str_v0;
  bool str_naive = false;
  double str_lo = 1.8, str_hi = 2.2;
  int str_samples = 8;
  add_phase_opts(str, str_phase);
  add_common(str, str_common);
  str->add_option("--anchor-xi", str_xi0);
  str->add_option("--anchor-v", str_v0);
  str->add_flag("--naive-abc", str_naive, "use flat decomposition data, skipping validation");
  str->add_option("--band-lo", str_lo);
  str->add_option("--band-hi", str_hi);
  str->add_option("--samples-per-radius", str_samples);

  // tan-coniness
  auto* tanc = app.add_subcommand("tan-coniness", "tangent-frame determinant experiment");
  CommonOpts tan_common;
  int tan_n = 3, tan_levels = 4;
  double tan_t0 = 1.05;
  std::string tan_p = "1e-3,1e-3";
  add_common(tanc, tan_common);
  tanc->add_option("--n", tan_n);
  tanc->add_option("--t0", tan_t0);
  tanc->add_option("--p", tan_p, "active target components, comma separated");
  tanc->add_option("--levels", tan_levels, "halvings of p for the scaling plot");

  // tubes
  auto* tubes = app.add_subcommand("tubes", "tube family experiments");
  tubes->require_subcommand(1);
  auto* sk = tubes->add_subcommand("sk-run", "generate a family and check the hypotheses");
  PhasePick sk_phase;
  CommonOpts sk_common;
  std::string sk_delta = "2^-6", sk_mode = "grid";
  double sk_eta = 0.2;
  int sk_res = 0;
  add_phase_opts(sk, sk_phase);
  add_common(sk, sk_common);
  sk->add_option("--delta", sk_delta, "tube radius, e.g. 2^-6");
  sk->add_option("--mode", sk_mode, "grid | cantor");
  sk->add_option("--eta", sk_eta);
  sk->add_option("--grid-res", sk_res, "rasterization resolution; 0 selects 4/delta");

  auto* rs = tubes->add_subcommand("rescale-check", "radial dilation of children in a parent");
  PhasePick rs_phase;
  CommonOpts rs_common;
  std::string rs_ladder = "2^-3,2^-4,2^-5", rs_v0;
  int rs_children = 5, rs_res = 96;
  add_phase_opts(rs, rs_phase);
  add_common(rs, rs_common);
  rs->add_option("--rho-ladder", rs_ladder);
  rs->add_option("--anchor-v", rs_v0);
  rs->add_option("--children", rs_children);
  rs->add_option("--grid-res", rs_res);
  rs_phase.name = "tan";

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (check->parsed())
      return run_check(check, check_phase, check_common, check_samples, check_tol, check_fail,
                       check_tmax, check_expect);
    if (abcv->parsed())
      return run_abc_verify(abcv, abc_phase, abc_common, abc_samples, abc_tol);
    if (trace->parsed())
      return run_trace(trace, trace_phase, trace_common, trace_xi, trace_v, trace_count);
    if (str->parsed())
      return run_straighten(str, str_phase, str_common, str_xi0, str_v0, str_naive, str_lo,
                            str_hi, str_samples);
    if (tanc->parsed()) return run_tan(tanc, tan_common, tan_n, tan_t0, tan_p, tan_levels);
    if (sk->parsed())
      return run_sk(sk, sk_phase, sk_common, sk_delta, sk_mode, sk_eta, sk_res);
    if (rs->parsed())
      return run_rescale(rs, rs_phase, rs_common, rs_ladder, rs_v0, rs_children, rs_res);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
