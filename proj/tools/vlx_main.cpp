// Batch driver for the layered vortex-sheet library.
//
//   vlx simulate  --config run.json --out DIR   layered evolution artifacts
//   vlx reference --config run.json --out DIR   single-sheet evolution artifacts
//   vlx converge  --config run.json --out DIR   epsilon-rate study vs the reference
//   vlx jump      --config run.json --out DIR   velocity jump diagnostics per epsilon
//   vlx diagnose  --config run.json --out DIR   kernel lower-bound and analyticity report
//                                               (of the configured run's final state)
//
// Every command reads one JSON configuration document (see
// vlx/io.hpp::parse_run_config for the schema), writes CSV tables and JSON
// reports into --out, and stamps each artifact with the configuration hash.
// Outputs are byte-identical across reruns with the same configuration.
// --threads overrides the configured kernel thread count (0 = all cores).
//
// Exit codes: 0 success, 2 configuration error, 3 run halted by a guard.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vlx/dynamics.hpp"
#include "vlx/errors.hpp"
#include "vlx/experiments.hpp"
#include "vlx/geometry.hpp"
#include "vlx/io.hpp"
#include "vlx/kernels.hpp"
#include "vlx/spectral.hpp"

namespace fs = std::filesystem;
using namespace vlx;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitHalt = 3;

std::string snapshot_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "state_%04zu.csv", index);
  return buf;
}

// ---------------------------------------------------------------------------
// Artifact assembly
// ---------------------------------------------------------------------------

CsvTable layered_diagnostics_table(const std::vector<StepDiagnostics>& steps, int n_layers) {
  CsvTable table;
  table.columns = {"time", "dt", "max_speed", "admissibility", "min_radius", "support_width"};
  for (int l = 0; l < n_layers; ++l) table.columns.push_back("circulation_" + std::to_string(l));
  for (const auto& step : steps) {
    std::vector<double> row = {step.time,         step.dt,         step.max_speed,
                               step.admissibility, step.min_radius, step.support_width};
    row.insert(row.end(), step.circulation.begin(), step.circulation.end());
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable reference_diagnostics_table(const std::vector<StepDiagnostics>& steps) {
  CsvTable table;
  table.columns = {"time", "dt", "max_speed", "min_radius", "mean_density"};
  for (const auto& step : steps)
    table.rows.push_back(
        {step.time, step.dt, step.max_speed, step.min_radius, step.circulation.at(0)});
  return table;
}

CsvTable layered_state_table(const LayeredState& state) {
  CsvTable table;
  table.columns = {"layer", "node", "s", "w1", "w3", "w4"};
  const int n = state.grid.size();
  for (int l = 0; l < state.n_layers; ++l) {
    const auto k = static_cast<std::size_t>(l);
    for (int j = 0; j < n; ++j)
      table.rows.push_back({static_cast<double>(l), static_cast<double>(j), state.grid.node(j),
                            state.w1[k].value(j), state.w3[k].value(j), state.w4[k].value(j)});
  }
  return table;
}

CsvTable graph_state_table(const GraphState& state) {
  CsvTable table;
  table.columns = {"node", "s", "nu", "varpi"};
  const PeriodicGrid& grid = state.nu.grid();
  for (int j = 0; j < grid.size(); ++j)
    table.rows.push_back(
        {static_cast<double>(j), grid.node(j), state.nu.value(j), state.varpi.value(j)});
  return table;
}

std::string snapshot_listing(const std::vector<double>& times) {
  std::vector<std::string> items;
  items.reserve(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) {
    JsonDoc entry;
    entry.put("index", i);
    entry.put("time", times[i]);
    entry.put("file", snapshot_name(i));
    items.push_back(entry.compact());
  }
  return JsonDoc::array(items);
}

std::string rate_json(const RateFit& fit) {
  JsonDoc doc;
  doc.put("slope", fit.slope);
  doc.put("residual", fit.residual);
  doc.put("n", fit.n);
  return doc.compact();
}

std::string radius_json(const RadiusFit& fit) {
  JsonDoc doc;
  doc.put("value", fit.value);
  doc.put("indeterminate", fit.indeterminate);
  doc.put("capped", fit.capped);
  doc.put("usable_modes", fit.usable_modes);
  doc.put("residual", fit.residual);
  return doc.compact();
}

// ---------------------------------------------------------------------------
// Shared run plumbing
// ---------------------------------------------------------------------------

double single_epsilon(const RunSetup& setup, const char* command) {
  if (setup.experiment.epsilons.size() != 1)
    throw InvalidArgument(std::string(command) +
                          " needs exactly one \"epsilon\" (use \"epsilons\" with converge/jump)");
  return setup.experiment.epsilons.front();
}

// An explicit time step must respect the CFL bound already at the initial
// state; rejecting it here keeps a misconfigured step from ever starting.
void validate_explicit_step(const LayeredState& state, const EvolutionConfig& cfg) {
  if (cfg.dt <= 0.0) return;
  const CurveCache cache = make_curve_cache(state.curve, state.grid);
  const RhsResult probe = layered_rhs(state, cache, cfg);
  if (probe.max_speed <= 0.0) return;
  const double bound = cfg.cfl_safety * state.grid.spacing() / probe.max_speed;
  if (cfg.dt > bound)
    throw InvalidArgument("evolution.dt=" + format_float(cfg.dt) +
                          " exceeds the CFL bound " + format_float(bound) +
                          " at the initial state");
}

int finish_run(const fs::path& out, const std::string& file, JsonDoc& summary, bool completed,
               const std::string& halt_reason) {
  summary.put("completed", completed);
  summary.put("halt_reason", halt_reason);
  write_text_file(out / file, summary.str());
  if (!completed) {
    std::fprintf(stderr, "run halted: %s (artifacts in %s)\n", halt_reason.c_str(),
                 out.string().c_str());
    return kExitHalt;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_simulate(const RunSetup& setup, const fs::path& out) {
  const double epsilon = single_epsilon(setup, "simulate");
  const LayeredState initial = build_experiment_state(setup.experiment, epsilon);
  const EvolutionConfig& cfg = setup.experiment.evolution;
  validate_explicit_step(initial, cfg);

  const Trajectory traj = integrate(initial, cfg);
  write_text_file(out / "diagnostics.csv",
                  to_csv(layered_diagnostics_table(traj.steps, initial.n_layers), setup.hash));

  std::vector<double> snapshot_times;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    snapshot_times.push_back(traj.snapshots[i].time);
    write_text_file(out / snapshot_name(i), to_csv(layered_state_table(traj.snapshots[i]), setup.hash));
  }

  const ConservationReport conservation = conservation_monitor(traj);
  const WidthSeries width = support_width_monitor(traj);

  JsonDoc summary;
  summary.put("config_hash", setup.hash);
  summary.put("command", "simulate");
  summary.put("epsilon", epsilon);
  summary.put("n_points", setup.experiment.n_points);
  summary.put("n_layers", setup.experiment.n_layers);
  summary.put("t_end", cfg.t_end);
  summary.put("n_steps", traj.steps.size());
  summary.put("final_time", traj.snapshots.back().time);
  summary.put("max_layer_circulation_drift", conservation.max_layer_drift);
  summary.put("max_total_circulation_drift", conservation.max_total_drift);
  summary.put("max_width_ratio", width.max_ratio);
  summary.put_raw("snapshots", snapshot_listing(snapshot_times));
  return finish_run(out, "summary.json", summary, traj.completed, traj.halt_reason);
}

int run_reference(const RunSetup& setup, const fs::path& out) {
  const GraphState initial = build_reference_state(setup.experiment);
  const EvolutionConfig& cfg = setup.experiment.evolution;
  const GraphTrajectory traj = integrate_reference(setup.experiment.curve, initial, cfg);

  write_text_file(out / "diagnostics.csv",
                  to_csv(reference_diagnostics_table(traj.steps), setup.hash));
  std::vector<double> snapshot_times;
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    snapshot_times.push_back(traj.snapshots[i].time);
    write_text_file(out / snapshot_name(i), to_csv(graph_state_table(traj.snapshots[i]), setup.hash));
  }

  JsonDoc summary;
  summary.put("config_hash", setup.hash);
  summary.put("command", "reference");
  summary.put("n_points", setup.experiment.n_points);
  summary.put("t_end", cfg.t_end);
  summary.put("n_steps", traj.steps.size());
  summary.put("final_time", traj.snapshots.back().time);
  summary.put("final_mean_density", traj.snapshots.back().varpi.mean());
  summary.put_raw("snapshots", snapshot_listing(snapshot_times));
  return finish_run(out, "summary.json", summary, traj.completed, traj.halt_reason);
}

int run_converge(const RunSetup& setup, const fs::path& out) {
  const ConvergenceReport report = run_convergence(setup.experiment);

  CsvTable errors;
  errors.columns = {"epsilon", "time", "e_nu", "e_varpi"};
  for (const auto& p : report.points) errors.rows.push_back({p.epsilon, p.time, p.e_nu, p.e_varpi});
  write_text_file(out / "convergence.csv", to_csv(errors, setup.hash));

  CsvTable width;
  width.columns = {"epsilon", "max_width_ratio"};
  for (std::size_t i = 0; i < report.width_ratio.size(); ++i)
    width.rows.push_back({setup.experiment.epsilons[i], report.width_ratio[i]});
  write_text_file(out / "width.csv", to_csv(width, setup.hash));

  std::vector<std::string> rate_items;
  for (std::size_t i = 0; i < report.rates.size(); ++i) {
    JsonDoc entry;
    entry.put("time", report.comparison_times[i]);
    entry.put("slope", report.rates[i].slope);
    entry.put("residual", report.rates[i].residual);
    entry.put("n", report.rates[i].n);
    rate_items.push_back(entry.compact());
  }

  JsonDoc doc;
  doc.put("config_hash", setup.hash);
  doc.put("command", "converge");
  doc.put("epsilons", setup.experiment.epsilons);
  doc.put("comparison_times", report.comparison_times);
  doc.put_raw("rates", JsonDoc::array(rate_items));
  doc.put("width_ratio", report.width_ratio);
  doc.put("warnings", report.warnings);
  write_text_file(out / "rates.json", doc.str());
  return kExitOk;
}

int run_jump(const RunSetup& setup, const fs::path& out) {
  const JumpTestReport report = jump_relation_test(setup.experiment);

  CsvTable table;
  table.columns = {"epsilon", "mean_vs_limit", "corrected_worst", "jump_vs_density"};
  for (const auto& p : report.points)
    table.rows.push_back({p.epsilon, p.mean_vs_limit, p.corrected_worst, p.jump_vs_density});
  write_text_file(out / "jump.csv", to_csv(table, setup.hash));

  JsonDoc doc;
  doc.put("config_hash", setup.hash);
  doc.put("command", "jump");
  doc.put("epsilons", setup.experiment.epsilons);
  doc.put_raw("mean_rate", rate_json(report.mean_rate));
  doc.put_raw("corrected_rate", rate_json(report.corrected_rate));
  write_text_file(out / "rates.json", doc.str());
  return kExitOk;
}

int run_diagnose(const RunSetup& setup, const fs::path& out) {
  const double epsilon = single_epsilon(setup, "diagnose");
  LayeredState state = build_experiment_state(setup.experiment, epsilon);
  const EvolutionConfig& cfg = setup.experiment.evolution;

  // Diagnose the state the configured evolution ends in; with no evolution
  // configured (t_end = 0) the initial state is diagnosed directly.
  bool completed = true;
  std::string halt_reason;
  if (cfg.t_end > 0.0) {
    validate_explicit_step(state, cfg);
    const Trajectory traj = integrate(state, cfg);
    state = traj.snapshots.back();
    completed = traj.completed;
    halt_reason = traj.halt_reason;
  }

  const LowerBoundReport bound =
      kernel_lower_bound_check(state, setup.probe.rho, setup.probe.n_samples, setup.probe.seed);

  JsonDoc lower;
  lower.put("min_ratio", bound.min_ratio);
  lower.put("s", bound.s);
  lower.put("sigma", bound.sigma);
  lower.put("beta", bound.beta);
  lower.put("layer", bound.layer);
  lower.put("source_layer", bound.source_layer);
  lower.put("n_samples", bound.n_samples);
  lower.put("rho", setup.probe.rho);
  lower.put("seed", static_cast<std::size_t>(setup.probe.seed));

  double min_radius = std::numeric_limits<double>::infinity();
  std::vector<std::string> layer_items;
  for (int l = 0; l < state.n_layers; ++l) {
    const auto k = static_cast<std::size_t>(l);
    const RadiusFit r1 = estimate_analyticity_radius(state.w1[k]);
    const RadiusFit r3 = estimate_analyticity_radius(state.w3[k]);
    const RadiusFit r4 = estimate_analyticity_radius(state.w4[k]);
    for (const RadiusFit& r : {r1, r3, r4})
      if (!r.indeterminate) min_radius = std::min(min_radius, r.value);
    JsonDoc entry;
    entry.put("layer", l);
    entry.put_raw("w1", radius_json(r1));
    entry.put_raw("w3", radius_json(r3));
    entry.put_raw("w4", radius_json(r4));
    layer_items.push_back(entry.compact());
  }

  JsonDoc doc;
  doc.put("config_hash", setup.hash);
  doc.put("command", "diagnose");
  doc.put("epsilon", epsilon);
  doc.put("time", state.time);
  doc.put("curve_rho0", setup.experiment.curve.rho0());
  doc.put_raw("lower_bound", lower.compact());
  doc.put("min_fitted_radius", min_radius);
  doc.put_raw("analyticity", JsonDoc::array(layer_items));
  return finish_run(out, "diagnose.json", doc, completed, halt_reason);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered vortex-sheet simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int threads = -1;
  const char* names[] = {"simulate", "reference", "converge", "jump", "diagnose"};
  const char* blurbs[] = {"evolve a layered state and write its trajectory",
                          "evolve the single-sheet reference and write its trajectory",
                          "measure epsilon-convergence against the reference",
                          "measure velocity jump relations across the layer stack",
                          "run the kernel lower-bound probe and analyticity fits on the "
                          "configured run's final state"};
  for (std::size_t i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (created if missing)")->required();
    sub->add_option("--threads", threads, "kernel evaluation threads (0 = all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    RunSetup setup = parse_run_config(read_text_file(config_path));
    if (threads >= 0) setup.experiment.evolution.kernel.threads = threads;
    const fs::path out(out_dir);
    fs::create_directories(out);

    if (app.got_subcommand("simulate")) return run_simulate(setup, out);
    if (app.got_subcommand("reference")) return run_reference(setup, out);
    if (app.got_subcommand("converge")) return run_converge(setup, out);
    if (app.got_subcommand("jump")) return run_jump(setup, out);
    return run_diagnose(setup, out);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericalFailure& e) {
    std::fprintf(stderr, "run halted: %s\n", e.what());
    return kExitHalt;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "run halted: %s\n", e.what());
    return kExitHalt;
  }
}
