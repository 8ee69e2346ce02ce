#include "mcf/cli.hpp"

#include "mcf/config.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

namespace mcf {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Residuals below this at every level are rounding noise, not discretization error.
constexpr double kResidualFloor = 1e-7;

struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

void write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot write " + p.string());
  f << text;
}

void write_json(const fs::path& p, const ordered_json& j) { write_file(p, j.dump(2) + "\n"); }

const char* kTraceColumns[] = {"step",     "t",          "dt",       "volume",          "H2_max",
                               "H2_min",   "A2_max",     "A02_max",  "Q_max",           "f_sigma_max",
                               "f5_max",   "int_f_sigma_p", "diameter", "hbar",         "A02_over_H2_max",
                               "res_dmu",  "res_H2",     "res_A2"};
const char* kRescaledColumns[] = {"psi", "t_tilde", "vol_tilde", "A0_tilde_max", "Hratio_tilde"};

void sample_row(std::ostream& o, const FlowSample& s) {
  const auto& r = s.residual;
  o << s.step;
  for (double v : {s.t, s.dt, s.volume, s.H2_max, s.H2_min, s.A2_max, s.A02_max, s.Q_max, s.f_sigma_max, s.f5_max,
                   s.int_f_sigma_p, s.diameter, s.hbar, s.A02_over_H2_max, r ? r->res_dmu : kNaN,
                   r ? r->res_H2 : kNaN, r ? r->res_A2 : kNaN})
    o << ',' << format_double(v);
}

bool keep_row(size_t i, size_t count, long stride) {
  return i % static_cast<size_t>(stride) == 0 || i + 1 == count;
}

ordered_json status_json(const FlowTrace& tr) {
  ordered_json j;
  j["status"] = to_string(tr.status);
  j["t_final"] = num(tr.t_final);
  j["blowup_time"] = tr.blowup_time ? num(*tr.blowup_time) : ordered_json(nullptr);
  j["blowup_node"] = tr.blowup_node;
  j["failed_node"] = tr.failed_node;
  j["message"] = tr.message;
  j["steps"] = tr.steps.empty() ? 0 : static_cast<long>(tr.steps.size()) - 1;
  j["samples"] = tr.samples.size();
  return j;
}

ordered_json extrema_json(const FlowTrace& tr) {
  ordered_json j;
  double A2 = 0, H2 = 0, Q = -INFINITY, fs = 0, f5 = 0, ratio = 0;
  for (const auto& s : tr.samples) {
    A2 = std::max(A2, s.A2_max);
    H2 = std::max(H2, s.H2_max);
    Q = std::max(Q, s.Q_max);
    fs = std::max(fs, s.f_sigma_max);
    f5 = std::max(f5, s.f5_max);
    ratio = std::max(ratio, s.A02_over_H2_max);
  }
  j["A2_max"] = num(A2);
  j["H2_max"] = num(H2);
  j["Q_max"] = num(Q);
  j["f_sigma_max"] = num(fs);
  j["f5_max"] = num(f5);
  j["A02_over_H2_max"] = num(ratio);
  bool monotone = true;
  for (size_t i = 1; i < tr.samples.size(); ++i)
    if (!(tr.samples[i].volume < tr.samples[i - 1].volume)) monotone = false;
  j["volume_strictly_decreasing"] = monotone;
  return j;
}

ordered_json config_json(const ExperimentConfig& c) {
  ordered_json j;
  j["ambient"] = {{"kind", c.ambient_kind}, {"c", c.ambient_c}};
  j["immersion"] = {{"shape", c.shape.kind}, {"params", c.shape.params}, {"n", c.shape.n}, {"codim", c.shape.codim},
                    {"source", to_string(c.source)}};
  j["grid"] = {{"topology", to_string(effective_topology(c))}, {"sizes", c.sizes}};
  j["pinching"] = {{"a", c.pinching.a}, {"b", c.pinching.b}, {"sigma", c.pinching.sigma}, {"p", c.pinching.p}};
  j["seed"] = c.seed;
  return j;
}

ordered_json summary_head(const std::string& command, const ExperimentConfig& c) {
  ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["command"] = command;
  j["config"] = config_json(c);
  return j;
}

void write_snapshots(const fs::path& dir, const FlowTrace& tr, long every) {
  for (size_t i = 0; i < tr.states.size(); ++i) {
    if (i % static_cast<size_t>(every) != 0 && i + 1 != tr.states.size()) continue;
    char name[48];
    std::snprintf(name, sizeof name, "sample_%06zu.csv", i);
    write_file(dir / "snapshots" / name, immersion_csv(tr.states[i]));
  }
}

ordered_json constants_json(const PinchingConstants& k, const CurvatureBounds& b) {
  ordered_json j;
  j["n"] = k.n;
  j["d"] = k.d;
  j["K1"] = b.K1;
  j["K2"] = b.K2;
  j["L"] = b.L;
  j["a"] = k.a;
  for (auto [name, v] : std::initializer_list<std::pair<const char*, double>>{
           {"C1", k.C1}, {"C2", k.C2}, {"C3", k.C3}, {"C4", k.C4}, {"b1", k.b1}, {"b0", k.b0}, {"eta", k.eta},
           {"eps_nabla", k.eps_nabla}, {"Cnd", k.Cnd}, {"C0", k.C0}, {"delta", k.delta}})
    j[name] = num(v);
  return j;
}


int cmd_constants(int n, int d, double K1, double K2, double L, std::optional<double> a,
                  std::optional<double> b_init, const std::string& config, const std::string& out_dir,
                  std::ostream& out) {
  PinchingParams params;
  if (!config.empty()) params = load_config(config).pinching;
  CurvatureBounds b{K1, K2, L};
  b.validate();
  const double av = a ? *a : pinching_coefficient(n);
  auto k = pinching_constants(n, d, b, av, params);
  ordered_json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["constants"] = constants_json(k, b);
  if (b_init) {
    auto ode = b_blowup_ode(*b_init, k.C3, k.C4, av, n, 1e-5);
    j["blowup_ode"] = {{"b_init", *b_init}, {"blowup", ode.blowup}, {"t0", num(ode.t0)}};
  }
  out << j.dump(2) << "\n";
  if (!out_dir.empty()) write_json(fs::path(out_dir) / "constants.json", j);
  return 0;
}

int cmd_analyze(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  auto amb = make_ambient(c);
  auto imm = make_immersion(c, amb);
  auto bounds = resolve_bounds(c, amb, imm.positions());
  const Exec exec = c.flow.exec;
  ExtrinsicOptions eo;
  eo.hmin_sq_guard = c.flow.hmin_sq_guard;
  auto st = extrinsic_states(imm, eo, exec);
  FlowSample s = flow_diagnostics(imm, st, c.flow);
  auto res = structure_residuals_max(imm, 0.0, exec, eo);
  auto k = pinching_constants(imm.n(), imm.codim(), bounds, c.pinching.a, c.pinching);

  ordered_json j = summary_head("analyze", c);
  j["nodes"] = imm.node_count();
  j["bounds"] = {{"K1", bounds.K1}, {"K2", bounds.K2}, {"L", bounds.L}};
  j["geometry"] = {{"volume", num(s.volume)},   {"diameter", num(s.diameter)}, {"hbar", num(s.hbar)},
                   {"H2_max", num(s.H2_max)},   {"H2_min", num(s.H2_min)},     {"A2_max", num(s.A2_max)},
                   {"A02_max", num(s.A02_max)}, {"Q_max", num(s.Q_max)},       {"f_sigma_max", num(s.f_sigma_max)},
                   {"f5_max", num(s.f5_max)},   {"A02_over_H2_max", num(s.A02_over_H2_max)}};
  j["structure_residuals"] = {{"gauss", num(res.gauss)}, {"codazzi", num(res.codazzi)}, {"ricci", num(res.ricci)}};
  j["constants"] = constants_json(k, bounds);
  write_json(dir / "summary.json", j);
  out << "analyze: " << imm.node_count() << " nodes, volume " << format_double(s.volume) << "\n";
  return 0;
}

int cmd_flow(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  auto amb = make_ambient(c);
  auto imm = make_immersion(c, amb);
  FlowConfig fc = c.flow;
  fc.pinching = c.pinching;
  if (c.snapshots) fc.keep_states = true;
  FlowTrace tr = run_flow(imm, fc);
  write_file(dir / "trace.csv", trace_csv(tr, c.output_stride));
  ordered_json j = summary_head("flow", c);
  j["result"] = status_json(tr);
  j["extrema"] = extrema_json(tr);
  write_json(dir / "summary.json", j);
  if (c.snapshots) write_snapshots(dir, tr, c.snapshot_every);
  out << "flow: " << to_string(tr.status) << " at t = " << format_double(tr.t_final);
  if (tr.blowup_time) out << ", T = " << format_double(*tr.blowup_time);
  out << "\n";
  if (tr.status == FlowStatus::step_failure) throw RuntimeFailure("flow step failed: " + tr.message);
  return 0;
}

int cmd_rescale(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  auto amb = make_ambient(c);
  auto imm = make_immersion(c, amb);
  FlowConfig fc = c.flow;
  fc.pinching = c.pinching;
  RescaledTrace tr = run_rescaled_flow(imm, fc);
  write_file(dir / "trace.csv", trace_csv(tr, c.output_stride));
  ordered_json j = summary_head("rescale-flow", c);
  j["result"] = status_json(tr.flow);
  j["extrema"] = extrema_json(tr.flow);
  if (!tr.steps.empty()) j["result"]["psi_final"] = num(tr.steps.back().psi);
  write_json(dir / "summary.json", j);
  if (c.snapshots) write_snapshots(dir, tr.flow, c.snapshot_every);
  if (tr.flow.status == FlowStatus::step_failure) throw RuntimeFailure("flow step failed: " + tr.flow.message);

  RoundnessReport r = roundness_report(tr);
  ordered_json rj;
  rj["schema_version"] = kSummarySchemaVersion;
  for (auto [name, v] : std::initializer_list<std::pair<const char*, double>>{
           {"initial_A02_max", r.initial_A02_max},
           {"final_A02_max", r.final_A02_max},
           {"final_H_ratio", r.final_H_ratio},
           {"volume_drift", r.volume_drift},
           {"H_min", r.H_min},
           {"H_max", r.H_max},
           {"dmu_tilde_max", r.dmu_tilde_max},
           {"closure_max", r.closure_max},
           {"final_ambient_curvature", r.final_ambient_curvature}})
    rj[name] = num(v);
  rj["A02_nonincreasing_last_half"] = r.A02_nonincreasing_last_half;
  rj["samples"] = r.samples;
  write_json(dir / "roundness.json", rj);
  out << "rescale-flow: " << to_string(tr.flow.status) << ", final/initial A0~^2 = "
      << format_double(r.final_A02_max / r.initial_A02_max) << ", volume drift " << format_double(r.volume_drift)
      << "\n";
  return 0;
}

int cmd_audit(const ExperimentConfig& c, const fs::path& dir, std::ostream& out) {
  auto amb = make_ambient(c);
  auto imm = make_immersion(c, amb);
  AuditContext ctx;
  ctx.bounds = resolve_bounds(c, amb, imm.positions());
  ctx.params = c.pinching;
  ctx.constants = pinching_constants(imm.n(), imm.codim(), ctx.bounds, c.pinching.a, c.pinching);
  ctx.tol = c.audit_tol;
  if (imm.source() == DerivativeSource::finite_difference) {
    const double h = imm.min_spacing();
    ctx.rel_tol = h * h;
  }
  ctx.hmin_sq_guard = c.flow.hmin_sq_guard;
  ctx.random_planes = c.audit_random_planes;
  ctx.seed = c.seed;
  auto rows = audit_immersion(imm, ctx, c.flow.exec);
  auto sum = summarize_audit(rows);

  std::ostringstream csv;
  csv << "node,entry,present,lhs,rhs,margin,pass\n";
  for (size_t k = 0; k < rows.size(); ++k)
    for (const auto& e : rows[k])
      csv << k << ',' << e.name << ',' << (e.present ? 1 : 0) << ',' << format_double(e.lhs) << ','
          << format_double(e.rhs) << ',' << format_double(e.margin) << ',' << (e.pass ? 1 : 0) << '\n';
  write_file(dir / "audit.csv", csv.str());

  ordered_json j = summary_head("audit", c);
  j["bounds"] = {{"K1", ctx.bounds.K1}, {"K2", ctx.bounds.K2}, {"L", ctx.bounds.L}};
  j["tolerance"] = {{"abs", ctx.tol}, {"rel", ctx.rel_tol}};
  bool all = true;
  ordered_json entries = ordered_json::array();
  for (size_t i = 0; i < sum.names.size(); ++i) {
    const double rate = sum.pass_rate(sum.names[i]);
    if (sum.passed[i] != sum.audited[i]) all = false;
    entries.push_back({{"name", sum.names[i]},
                       {"audited", sum.audited[i]},
                       {"passed", sum.passed[i]},
                       {"pass_rate", num(rate)},
                       {"worst_margin", num(sum.worst_margin[i])}});
  }
  j["entries"] = entries;
  j["all_pass"] = all;
  write_json(dir / "summary.json", j);
  out << "audit: " << (all ? "all entries pass" : "some entries fail") << "\n";
  return 0;
}

std::vector<int> level_sizes(const std::vector<int>& base, int level) {
  std::vector<int> s{level};
  for (size_t i = 1; i < base.size(); ++i)
    s.push_back(static_cast<int>(std::lround(double(base[i]) * level / base[0])));
  return s;
}

/// Least-squares slope of log(value) against log(1/h).
double fitted_order(const std::vector<double>& h, const std::vector<double>& v) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(h.size());
  for (size_t i = 0; i < h.size(); ++i) {
    const double x = -std::log(h[i]), y = std::log(v[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
}

int cmd_convergence(const ExperimentConfig& c, const std::vector<int>& levels, const fs::path& dir, std::ostream& out) {
  auto amb = make_ambient(c);
  const char* names[] = {"gauss", "codazzi", "ricci", "res_dmu", "res_H2", "res_A2"};
  std::vector<double> h;
  std::vector<std::vector<double>> values(6);
  std::ostringstream csv;
  csv << "kind,quantity,level,h,value,flag\n";
  bool failed = false;
  for (int L : levels) {
    double hl = 0;
    try {
      auto imm = make_immersion(c, amb, level_sizes(c.sizes, L));
      hl = imm.grid().spacings[0];
      const double margin = imm.source() == DerivativeSource::analytic ? 0.0 : c.convergence_pole_margin;
      ExtrinsicOptions eo;
      eo.hmin_sq_guard = c.flow.hmin_sq_guard;
      auto sr = structure_residuals_max(imm, margin, c.flow.exec, eo);

      const int steps = std::max(2, static_cast<int>(std::lround(c.convergence_t / (c.convergence_dt_factor * hl * hl))));
      const double dt = c.convergence_t / steps;
      std::vector<DiscreteImmersion> w{imm.with_positions(imm.positions())};
      for (int k = 0; k <= steps; ++k) {
        w.push_back(mcf_step(w.back(), dt, c.flow.exec));
        if (w.size() > 3) w.erase(w.begin());
      }
      EvolutionOptions eopt;
      eopt.pole_margin = c.convergence_pole_margin;
      eopt.hmin_sq_guard = c.flow.hmin_sq_guard;
      eopt.exec = c.flow.exec;
      const double T = c.convergence_t;
      auto er = evolution_residual(w[0], w[1], w[2], T - dt, T, T + dt, eopt);
      const double v[6] = {sr.gauss, sr.codazzi, sr.ricci, er.res_dmu, er.res_H2, er.res_A2};
      h.push_back(hl);
      for (int q = 0; q < 6; ++q) {
        values[q].push_back(v[q]);
        csv << "residual," << names[q] << ',' << L << ',' << format_double(hl) << ',' << format_double(v[q]) << ",\n";
      }
    } catch (const std::exception& e) {
      failed = true;
      std::string msg = e.what();
      for (char& ch : msg)
        if (ch == ',' || ch == '\n') ch = ' ';
      csv << "failure,," << L << ',' << format_double(hl) << ",nan," << msg << '\n';
    }
  }
  for (int q = 0; q < 6; ++q) {
    std::string flag;
    double order = kNaN;
    if (h.size() >= 2) {
      double worst = 0;
      for (double x : values[q]) worst = std::max(worst, x);
      if (worst < kResidualFloor)
        flag = "floor";
      else
        order = fitted_order(h, values[q]);
    } else {
      flag = "insufficient";
    }
    csv << "order," << names[q] << ",," << ',' << format_double(order) << ',' << flag << '\n';
  }
  write_file(dir / "orders.csv", csv.str());
  out << "convergence: " << h.size() << " of " << levels.size() << " levels\n";
  if (failed) throw RuntimeFailure("convergence level failed; partial report written");
  return 0;
}

}  // namespace

std::string trace_header(bool rescaled) {
  std::string s;
  for (const char* c : kTraceColumns) s += (s.empty() ? "" : ",") + std::string(c);
  if (rescaled)
    for (const char* c : kRescaledColumns) s += "," + std::string(c);
  return s;
}

std::string trace_csv(const FlowTrace& tr, long stride) {
  std::ostringstream o;
  o << trace_header(false) << '\n';
  for (size_t i = 0; i < tr.samples.size(); ++i) {
    if (!keep_row(i, tr.samples.size(), stride)) continue;
    sample_row(o, tr.samples[i]);
    o << '\n';
  }
  return o.str();
}

std::string trace_csv(const RescaledTrace& tr, long stride) {
  std::ostringstream o;
  o << trace_header(true) << '\n';
  const auto& S = tr.flow.samples;
  for (size_t i = 0; i < S.size(); ++i) {
    if (!keep_row(i, S.size(), stride)) continue;
    sample_row(o, S[i]);
    if (i < tr.samples.size()) {
      const auto& r = tr.samples[i];
      for (double v : {r.psi, r.t_tilde, r.dilated.volume, std::sqrt(r.dilated.A02_max), r.dilated.H_ratio})
        o << ',' << format_double(v);
    } else {
      for (int k = 0; k < 5; ++k) o << ",nan";
    }
    o << '\n';
  }
  return o.str();
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean curvature flow simulator and diagnostics", "mcf"};
  app.require_subcommand(1);
  std::string config, out_dir;

  auto* constants = app.add_subcommand("constants", "Derived pinching constants");
  int cn = 2, cd = 1;
  double k1 = 0, k2 = 0, L = 0;
  std::optional<double> ca, b_init;
  constants->add_option("--n", cn, "Intrinsic dimension")->required();
  constants->add_option("--d", cd, "Codimension")->required();
  constants->add_option("--k1", k1, "Lower sectional bound K1");
  constants->add_option("--k2", k2, "Upper sectional bound K2");
  constants->add_option("--L", L, "Bound on the ambient curvature derivative");
  constants->add_option("--a", ca, "Pinching coefficient");
  constants->add_option("--b-init", b_init, "Initial value for the b(t) blowup ODE");
  constants->add_option("--config", config, "Configuration for free constants");
  constants->add_option("--out", out_dir, "Output directory");

  std::vector<CLI::App*> runs;
  std::vector<int> levels;
  for (const char* name : {"analyze", "flow", "rescale-flow", "convergence", "audit"}) {
    auto* sc = app.add_subcommand(name);
    sc->add_option("--config", config, "Configuration file")->required();
    sc->add_option("--out", out_dir, "Output directory (default: output.directory)");
    if (std::string(name) == "convergence") sc->add_option("--levels", levels, "Grid levels")->delimiter(',');
    runs.push_back(sc);
  }
  app.get_subcommand("analyze")->description("Geometry, pinching and structure diagnostics of the initial data");
  app.get_subcommand("flow")->description("Run the flow");
  app.get_subcommand("rescale-flow")->description("Run the flow with volume-normalizing rescaling");
  app.get_subcommand("convergence")->description("Residual refinement study");
  app.get_subcommand("audit")->description("Pointwise inequality audit");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  fs::path dir;
  try {
    if (constants->parsed()) return cmd_constants(cn, cd, k1, k2, L, ca, b_init, config, out_dir, out);
    ExperimentConfig c = load_config(config);
    dir = out_dir.empty() ? fs::path(c.output_directory) : fs::path(out_dir);
    if (app.got_subcommand("analyze")) return cmd_analyze(c, dir, out);
    if (app.got_subcommand("flow")) return cmd_flow(c, dir, out);
    if (app.got_subcommand("rescale-flow")) return cmd_rescale(c, dir, out);
    if (app.got_subcommand("audit")) return cmd_audit(c, dir, out);
    if (app.got_subcommand("convergence")) {
      if (!levels.empty()) c.convergence_levels = levels;
      c.validate();
      return cmd_convergence(c, c.convergence_levels, dir, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 2;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

int run_command(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_command(args, std::cout, std::cerr);
}

}  // namespace mcf
