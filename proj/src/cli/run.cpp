// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "cocyclab/cli.hpp"
#include "cocyclab/continuity.hpp"
#include "cocyclab/errors.hpp"
#include "cocyclab/io.hpp"
#include "cocyclab/lyapunov.hpp"
#include "cocyclab/parallel.hpp"
#include "cocyclab/projective.hpp"
#include "cocyclab/transfer.hpp"

namespace cocyclab::cli {
namespace {

using json = nlohmann::ordered_json;

std::string fmt(double v) { return format_double(v); }
std::string fmt(std::size_t v) { return std::to_string(v); }

json vec_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json mat_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_json(m.row(i).transpose()));
  return out;
}

LyapunovParams lyapunov_params(const ExperimentConfig& c) {
  LyapunovParams p;
  p.n = c.count("lyapunov.n");
  p.replicas = c.count("lyapunov.replicas");
  p.qr_stride = c.count("lyapunov.qr_stride");
  p.wedge_block = c.count("lyapunov.wedge_block");
  p.seed = c.seed;
  return p;
}

CumulantOptions cumulant_options(const ExperimentConfig& c) {
  CumulantOptions o;
  o.t_max = c.real("cumulant.t_max");
  o.points = c.count("cumulant.points");
  o.throw_on_gap_loss = false;
  return o;
}

json curve_json(const CumulantCurve& curve) {
  json j;
  j["c1_at_0"] = curve.c1_at_0;
  j["c2_at_0"] = curve.c2_at_0;
  j["gap_sigma"] = curve.gap_sigma;
  j["h_recommended"] = curve.h_recommended;
  j["valid"] = curve.valid;
  j["note"] = curve.note;
  return j;
}

std::string curve_csv(const CumulantCurve& curve) {
  CsvTable csv({"t", "lambda", "c", "gap_sigma"});
  for (std::size_t i = 0; i < curve.t_grid.size(); ++i)
    csv.add_row({fmt(curve.t_grid[i]), fmt(curve.lambda_vals[i]), fmt(curve.c_vals[i]), fmt(curve.gap_sigmas[i])});
  return csv.str();
}

struct Context {
  const ExperimentConfig& config;
  RunOutput& out;
  json summary;
  void file(const std::string& name, std::string contents) { out.files.emplace_back(name, std::move(contents)); }
  void warn(const std::string& w) { out.warnings.push_back(w); }
};

void run_mixing(Context& ctx) {
  const auto& c = ctx.config;
  const MarkovKernel& k = *c.kernel;
  const StationaryMeasure mu = stationary_measure(k);
  const KernelSpectrum spec = kernel_spectrum(k);
  const MixingProfile prof = mixing_profile(k, mu, c.count("mixing.probes"), c.count("mixing.horizon"), c.seed);
  json& j = ctx.summary;
  j["n_states"] = k.n_states();
  j["stationary"] = vec_json(mu.weights);
  j["rho"] = prof.rho;
  j["C"] = prof.C;
  j["is_strongly_mixing"] = prof.is_strongly_mixing;
  j["horizon"] = prof.horizon;
  j["probes_used"] = prof.probes_used;
  j["unit_multiplicity"] = spec.unit_multiplicity;
  if (c.params.count("mixing.doeblin_eps")) {
    const double eps = c.real("mixing.doeblin_eps");
    const auto mode = c.params.at("mixing.doeblin_mode") == "singletons" ? DoeblinSearch::SingletonsAndComplements
                                                                         : DoeblinSearch::Exhaustive;
    j["doeblin"] = {{"eps", eps}, {"mode", c.params.at("mixing.doeblin_mode")}, {"holds", doeblin_check(k, eps, mode)}};
  }
  if (!prof.is_strongly_mixing) ctx.warn("kernel is not strongly mixing (rho = 1)");
  CsvTable csv({"state", "weight"});
  for (std::size_t s = 0; s < mu.size(); ++s) csv.add_row({fmt(s), fmt(mu[s])});
  ctx.file("mixing.json", dump_json(j));
  ctx.file("stationary.csv", csv.str());
}

void run_lyapunov(Context& ctx) {
  const auto& c = ctx.config;
  const LyapunovParams p = lyapunov_params(c);
  const LyapunovSpectrum spec = lyapunov_spectrum_qr(*c.cocycle, *c.kernel, p);
  const GapPattern gaps = detect_gaps(spec);
  const bool wedge = c.flag("lyapunov.wedge");
  std::vector<WedgeEstimate> wedges;
  if (wedge)
    for (std::size_t jj = 1; jj <= c.cocycle->dim(); ++jj) wedges.push_back(lambda_via_wedge(*c.cocycle, *c.kernel, jj, p));
  json& j = ctx.summary;
  j["exponents"] = vec_json(spec.exponents);
  j["stderr"] = vec_json(spec.stderr_);
  j["n"] = spec.n_used;
  j["replicas"] = spec.replicas;
  j["seed"] = spec.seed;
  j["tau"] = gaps.tau;
  j["margins"] = gaps.margins;
  j["resolved"] = gaps.resolved;
  double sum = 0.0;
  for (const double v : spec.replica_logdet) sum += v;
  j["mean_log_det"] = spec.replica_logdet.empty() ? 0.0 : sum / static_cast<double>(spec.replica_logdet.size());
  CsvTable csv({"j", "exponent", "stderr", "wedge_partial_sum", "wedge_stderr"});
  for (Eigen::Index i = 0; i < spec.exponents.size(); ++i) {
    const auto idx = static_cast<std::size_t>(i);
    csv.add_row({fmt(idx + 1), fmt(spec.exponents(i)), fmt(spec.stderr_(i)), wedge ? fmt(wedges[idx].value) : "",
                 wedge ? fmt(wedges[idx].stderr_) : ""});
  }
  ctx.file("spectrum.json", dump_json(j));
  ctx.file("spectrum.csv", csv.str());
}

void run_kappa(Context& ctx) {
  const auto& c = ctx.config;
  SamplingBudget b;
  b.trajectories = c.count("kappa.trajectories");
  b.grid_resolution = c.count("kappa.resolution");
  b.random_pairs = c.count("kappa.random_pairs");
  b.singular_products = c.count("kappa.singular_products");
  b.diagnostics_top = c.count("kappa.diagnostics_top");
  b.horizon_cap = c.count("kappa.horizon_cap");
  const ContractionEstimate est = kappa(*c.cocycle, *c.kernel, c.real("kappa.alpha"), c.count("kappa.n"), b, c.seed);
  json& j = ctx.summary;
  j["alpha"] = est.alpha;
  j["n"] = est.n;
  j["value"] = est.value;
  j["std_error"] = est.std_error;
  j["pairs_sampled"] = est.pairs_sampled;
  j["sup_over"] = est.sup_over;
  j["degenerate_pairs"] = est.degenerate_pairs;
  j["argmax"] = {{"x", est.argmax_x}, {"p", vec_json(est.argmax_p)}, {"q", vec_json(est.argmax_q)}};
  if (c.flag("kappa.horizon")) {
    const ContractionHorizon h = contraction_horizon_report(*c.cocycle, *c.kernel, b, c.seed);
    json hj;
    hj["found"] = h.n0 > 0;
    hj["n0"] = h.n0;
    hj["best"] = h.best;
    hj["sup_log_ratio"] = h.sup_log_ratio;
    j["horizon"] = hj;
    if (h.n0 == 0) ctx.warn("no contraction horizon within " + std::to_string(b.horizon_cap) + " steps");
  }
  CsvTable csv({"x", "p_index", "q_index", "n", "alpha", "ratio_mean", "ratio_stderr"});
  for (const auto& d : est.diagnostics)
    csv.add_row({fmt(d.x), fmt(d.p_index), fmt(d.q_index), fmt(d.n), fmt(d.alpha), fmt(d.ratio_mean),
                 fmt(d.ratio_stderr)});
  ctx.file("kappa.json", dump_json(j));
  ctx.file("kappa_diagnostics.csv", csv.str());
}

std::string resolved_source(const ExperimentConfig& c) {
  const std::string& s = c.params.at("cumulant.source");
  if (s != "auto") return s;
  return c.cocycle ? "fiber" : "base";
}

CumulantCurve fiber_curve(const ExperimentConfig& c) {
  const BundleGrid grid(c.kernel->n_states(), c.cocycle->dim(), c.count("cumulant.resolution"));
  return cumulant_curve(*c.cocycle, *c.kernel, grid, cumulant_options(c));
}

void run_cumulant(Context& ctx) {
  const auto& c = ctx.config;
  const std::string source = resolved_source(c);
  require(source == "fiber" || c.observable.has_value(), Errc::InvalidArgument, "base source needs an observable");
  require(source == "base" || c.cocycle.has_value(), Errc::InvalidArgument, "fiber source needs a cocycle");
  const CumulantCurve curve =
      source == "fiber" ? fiber_curve(c) : base_cumulant_curve(*c.observable, *c.kernel, cumulant_options(c));
  if (!curve.valid) ctx.warn("GapLost: " + curve.note);
  json& j = ctx.summary;
  j["source"] = source;
  j.update(curve_json(curve));
  ctx.file("cumulant.json", dump_json(j));
  ctx.file("curve.csv", curve_csv(curve));
}

DeviationOptions deviation_options(const ExperimentConfig& c) {
  DeviationOptions o;
  o.n_grid = c.counts("ldt.n_grid");
  o.eps_grid = c.reals("ldt.eps_grid");
  o.samples = c.count("ldt.samples");
  o.seed = c.seed;
  return o;
}

void finish_ldt(Context& ctx, const DeviationTable& table, const BoundParams& bp, const CumulantCurve& curve) {
  json& j = ctx.summary;
  j["mean_ref"] = table.mean_ref;
  j["samples_per_cell"] = table.samples_per_cell;
  j["curve"] = curve_json(curve);
  j["bound"] = {{"C", bp.C},   {"h", bp.h},         {"eps0", bp.eps0},
                {"t0", bp.t0}, {"C1", bp.C1},       {"delta", bp.delta},
                {"k", bp.k},   {"degenerate_variance", bp.degenerate_variance}, {"note", bp.note}};
  std::size_t checked = 0, violations = 0;
  json bad = json::array();
  CsvTable csv({"n", "eps", "emp_prob", "wilson_lo", "wilson_hi", "bound_value", "samples"});
  for (const auto& cell : table.cells) {
    csv.add_row({fmt(cell.n), fmt(cell.eps), fmt(cell.emp_prob), fmt(cell.wilson_lo), fmt(cell.wilson_hi),
                 fmt(cell.bound_value), fmt(cell.samples)});
    if (!(cell.eps < bp.eps0)) continue;
    ++checked;
    const double half = 0.5 * (cell.wilson_hi - cell.wilson_lo);
    if (cell.emp_prob > cell.bound_value + 3.0 * half) {
      ++violations;
      bad.push_back({{"n", cell.n}, {"eps", cell.eps}, {"emp_prob", cell.emp_prob}, {"bound", cell.bound_value}});
    }
  }
  if (bp.degenerate_variance) ctx.warn("degenerate variance: bound is vacuous");
  if (checked == 0) ctx.warn("no cell has eps below eps0; verdict is vacuous");
  j["verdict"] = {{"cells_checked", checked}, {"violations", violations}, {"pass", violations == 0}, {"failed", bad}};
  ctx.file("ldt.json", dump_json(j));
  ctx.file("deviation.csv", csv.str());
  if (violations > 0) ctx.out.exit_code = 3;
}

void run_ldt_base(Context& ctx) {
  const auto& c = ctx.config;
  const Observable& obs = *c.observable;
  const StationaryMeasure mu = stationary_measure(*c.kernel);
  const double mean = exact_mean(obs, *c.kernel, mu);
  const CumulantCurve curve = base_cumulant_curve(obs, *c.kernel, cumulant_options(c));
  if (!curve.valid) ctx.warn("GapLost: " + curve.note);
  const BoundParams bp = theoretical_bound(curve, base_slack(obs, *c.kernel));
  DeviationTable table = empirical_deviation(obs, *c.kernel, mean, deviation_options(c));
  table.attach_bound(bp);
  finish_ldt(ctx, table, bp, curve);
}

void run_ldt_fiber(Context& ctx) {
  const auto& c = ctx.config;
  const LyapunovSpectrum spec = lyapunov_spectrum_qr(*c.cocycle, *c.kernel, lyapunov_params(c));
  const double center = spec.exponents(0);
  ctx.summary["L1"] = center;
  ctx.summary["L1_stderr"] = spec.stderr_(0);
  const CumulantCurve curve = fiber_curve(c);
  if (!curve.valid) ctx.warn("GapLost: " + curve.note);
  const BoundParams bp = theoretical_bound(
      curve, fiber_slack(*c.cocycle, *c.kernel, c.count("ldt.slack_samples"), c.seed, c.count("ldt.slack_directions")));
  DeviationTable table = empirical_deviation_fiber(*c.cocycle, *c.kernel, center, deviation_options(c));
  table.attach_bound(bp);
  finish_ldt(ctx, table, bp, curve);
}

void run_continuity(Context& ctx) {
  const auto& c = ctx.config;
  ScanOptions o;
  o.flag_samples = c.count("continuity.flag_samples");
  o.flag_n = c.count("continuity.flag_n");
  const ContinuityScan scan =
      continuity_scan(*c.cocycle, *c.kernel, *c.direction, c.reals("continuity.t_grid"), lyapunov_params(c), o);
  json& j = ctx.summary;
  j["fitted_exponent"] = scan.fitted_exponent ? json(*scan.fitted_exponent) : json(nullptr);
  j["raw_exponent"] = scan.raw_exponent;
  j["r2"] = scan.r2;
  j["rows_fitted"] = scan.rows_fitted;
  j["note"] = scan.note;
  const IrreducibilityReport irr = irreducibility_test(*c.cocycle, *c.kernel, c.count("continuity.max_cycles"));
  j["irreducibility"] = {{"verdict", to_string(irr.verdict)}, {"residual", irr.residual}};
  if (!scan.fitted_exponent) ctx.warn("no exponent fitted: " + scan.note);
  if (irr.verdict == IrreducibilityVerdict::Inconclusive) ctx.warn("irreducibility Inconclusive: " + irr.reason);
  CsvTable csv({"t", "d_inf", "L1_diff", "L1_stderr", "flag_dist", "pass"});
  for (const auto& r : scan.rows)
    csv.add_row({fmt(r.t), fmt(r.d_inf), fmt(r.L1_diff), fmt(r.L1_stderr), fmt(r.flag_dist), r.pass ? "1" : "0"});
  ctx.file("continuity.json", dump_json(j));
  ctx.file("scan.csv", csv.str());
}

json report_json(const IrreducibilityReport& r) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["residual"] = r.residual;
  j["cycles_used"] = r.cycles_used;
  j["candidates_tested"] = r.candidates_tested;
  j["reason"] = r.reason;
  json w = json::array();
  for (const auto& b : r.witness) w.push_back(mat_json(b));
  j["witness"] = w;
  return j;
}

void run_irreducible(Context& ctx) {
  const auto& c = ctx.config;
  const auto reports = total_irreducibility(*c.cocycle, *c.kernel, c.count("irreducible.max_cycles"));
  json& j = ctx.summary;
  j["verdict"] = to_string(reports.front().verdict);
  json per_k = json::array();
  CsvTable csv({"k", "verdict", "residual", "cycles_used", "candidates_tested"});
  for (std::size_t k = 0; k < reports.size(); ++k) {
    per_k.push_back(json{{"k", k + 1}});
    per_k.back().update(report_json(reports[k]));
    csv.add_row({fmt(k + 1), to_string(reports[k].verdict), fmt(reports[k].residual), fmt(reports[k].cycles_used),
                 fmt(reports[k].candidates_tested)});
    if (reports[k].verdict == IrreducibilityVerdict::Inconclusive)
      ctx.warn("k=" + std::to_string(k + 1) + " Inconclusive: " + reports[k].reason);
  }
  j["exterior_powers"] = per_k;
  ctx.file("irreducible.json", dump_json(j));
  ctx.file("irreducible.csv", csv.str());
}

}  // namespace

RunOutput execute(const ExperimentConfig& config, const std::string& config_hash) {
  const auto start = std::chrono::steady_clock::now();
  RunOutput out;
  Context ctx{config, out, json::object()};
  const std::string& cmd = config.command;
  if (cmd == "mixing") run_mixing(ctx);
  else if (cmd == "lyapunov") run_lyapunov(ctx);
  else if (cmd == "kappa") run_kappa(ctx);
  else if (cmd == "cumulant") run_cumulant(ctx);
  else if (cmd == "ldt-base") run_ldt_base(ctx);
  else if (cmd == "ldt-fiber") run_ldt_fiber(ctx);
  else if (cmd == "continuity") run_continuity(ctx);
  else if (cmd == "irreducible") run_irreducible(ctx);
  else throw Error(Errc::InvalidArgument, "unknown command '" + cmd + "'");

  json m;
  m["tool"] = "cocyclab";
  m["version"] = kToolVersion;
  m["command"] = cmd;
  m["config_hash"] = config_hash;
  m["seed"] = config.seed;
  json params = json::object();
  for (const auto& [k, v] : config.params) params[k] = v;
  m["parameters"] = params;
  m["warnings"] = out.warnings;
  json outputs = json::array();
  for (const auto& f : out.files) outputs.push_back(f.first);
  m["outputs"] = outputs;
  m["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.files.emplace_back("manifest.json", dump_json(m));
  return out;
}

int run(const std::string& command, const std::string& config_path, const std::string& out_dir,
        std::size_t threads, std::ostream& out, std::ostream& err) {
  std::string text;
  try {
    text = read_file(config_path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  ExperimentConfig config;
  std::string hash;
  try {
    const auto parent = std::filesystem::path(config_path).parent_path();
    const ConfigFile file = ConfigFile::parse(text, parent.empty() ? "." : parent.string());
    hash = file.hash();
    config = load_config(file, command);
  } catch (const ConfigError& e) {
    err << "invalid config " << config_path << ":\n";
    for (const auto& p : e.problems()) err << "  " << p << '\n';
    return 2;
  }
  if (threads > 0) set_max_threads(threads);
  RunOutput result;
  try {
    result = execute(config, hash);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  try {
    std::filesystem::create_directories(out_dir);
    for (const auto& [name, contents] : result.files) {
      const std::string path = (std::filesystem::path(out_dir) / name).string();
      write_file(path, contents);
      out << path << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  if (result.exit_code == 3) err << "verdict: FAILED\n";
  return result.exit_code;
}

int main_entry(int argc, char** argv) {
  CLI::App app{"Random linear cocycles over finite Markov shifts"};
  app.set_version_flag("--version", std::string(kToolVersion));
  std::string command, config_path, out_dir = ".";
  std::size_t threads = 0;
  app.add_option("command", command, "Command to run")->required()->check(CLI::IsMember(commands()));
  app.add_option("--config", config_path, "Config file")->required();
  app.add_option("--threads", threads, "Worker thread cap, 0 for the default")->check(CLI::NonNegativeNumber);
  app.add_option("--out", out_dir, "Output directory");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return run(command, config_path, out_dir, threads, std::cout, std::cerr);
}

}  // namespace cocyclab::cli
