#include "addpinn/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace addpinn;

namespace {

struct Overrides {
  std::string config;
  std::string out;
  double scale = 0.0;
  std::uint64_t seed = 0;
  bool has_seed = false;
  std::string method;
  std::string mode;
  std::string direction;
  int sensors = 0;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig cfg = load_config(o.config);
  if (!o.out.empty()) cfg.out_dir = o.out;
  if (o.scale > 0.0) cfg.scale = o.scale;
  if (o.has_seed) cfg.seeds = {o.seed};
  if (!o.method.empty()) cfg.methods = {MethodSpec{method_from_string(o.method)}};
  for (auto& m : cfg.methods) {
    if (!o.mode.empty()) m.mode = mode_from_string(o.mode);
    if (!o.direction.empty()) m.direction = direction_from_string(o.direction);
  }
  if (o.sensors > 0) cfg.sensor_counts = {o.sensors};
  cfg.validate();
  return cfg;
}

int cmd_generate(const std::string& scenario_path, const std::string& out) {
  const GodunovResult r = godunov_solve(make_scenario(load_scenario(scenario_path)));
  write_speed_field_csv(r.speed, out);
  std::cout << "wrote " << out << " (" << r.speed.n_cells() << " cells x " << r.speed.n_steps() << " steps)\n";
  return 0;
}

int cmd_sensors(const std::string& field_path, int n, const std::string& out) {
  const PreparedData d = prepare(read_speed_field_csv(field_path), n);
  write_text(out, observations_to_json(d.obs));
  std::cout << "wrote " << out << " (" << d.obs.records.size() << " records)\n";
  return 0;
}

int cmd_run(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const int n = cfg.sensor_counts.front();
  const PreparedData data = prepare(load_dataset(cfg.dataset), n);
  const CellResult cell =
      run_cell(data, cfg.dataset.name, cfg.methods.front(), n, cfg.effective_hyper(), cfg.seeds.front());
  write_cell(cell, cfg.out_dir);
  const auto path = cfg.out_dir / (cell_stem(cell) + ".json");
  if (!cell.ok) {
    std::cerr << "run failed: " << cell.error << " (log: " << path.string() << ")\n";
    return 1;
  }
  std::cout << method_label(cell.method) << " seed " << cell.seed << ": rel_l2 " << cell.report.rel_l2_pct
            << "%  rmse " << cell.report.rmse_mph << " mph  time " << cell.log.time_s << " s";
  if (cell.log.decision_made) std::cout << "\n  " << cell.log.decision.reason;
  std::cout << "\n  " << path.string() << "\n";
  return 0;
}

int cmd_matrix(const Overrides& o) {
  const ExperimentConfig cfg = resolve(o);
  const MatrixResult r = run_matrix(cfg, thread_count_from_env());
  std::cout << r.cells.size() - r.failed << "/" << r.cells.size() << " runs completed; results in "
            << cfg.out_dir.string() << "\n";
  if (r.aggregate) std::cout << aggregate_csv(*r.aggregate);
  return r.failed == 0 ? 0 : 1;
}

int cmd_analyze(const Overrides& o, const std::string& checkpoint) {
  const ExperimentConfig cfg = resolve(o);
  const Partition coarse = partition_from_json(read_text(checkpoint));
  const Hyperparams h = cfg.effective_hyper();
  for (const auto& net : coarse.nets())
    if (!(net.arch == h.parent_arch) && !(net.arch == h.child_arch))
      throw std::runtime_error("analyze: checkpoint architecture does not match the configuration");
  const PreparedData data = prepare(load_dataset(cfg.dataset), cfg.sensor_counts.front());
  const MethodSpec& m = cfg.methods.front();
  const AnalysisResult a = analyze(coarse, data, m.mode, m.direction, h.decomposition);
  write_text(cfg.out_dir / "residual_x.csv", profile_csv(a.x_profile));
  write_text(cfg.out_dir / "residual_t.csv", profile_csv(a.t_profile));
  write_text(cfg.out_dir / "decision.json", decision_to_json(a.decision));
  std::cout << a.decision.reason << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Residual-guided domain decomposition PINN for traffic speed reconstruction"};
  app.require_subcommand(1);

  std::string scenario_path, field_out = "field.csv";
  auto* gen = app.add_subcommand("generate", "Solve a scenario with the Godunov scheme and write the speed field CSV");
  gen->add_option("--config", scenario_path, "Scenario JSON")->required();
  gen->add_option("--out", field_out, "Output CSV");

  std::string field_in, obs_out = "observations.json";
  int n_sensors = 5;
  auto* sens = app.add_subcommand("sensors", "Extract equally spaced sensor observations from a field CSV");
  sens->add_option("--field", field_in, "Speed field CSV")->required();
  sens->add_option("--n", n_sensors, "Number of interior sensors");
  sens->add_option("--out", obs_out, "Output JSON");

  Overrides o;
  std::string checkpoint;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "Experiment JSON")->required();
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--scale", o.scale, "Epoch scale factor in (0, 1]");
    cmd->add_option("--direction", o.direction, "spatial, temporal or spacetime");
    cmd->add_option("--mode", o.mode, "shock_screened or decomposition_enabled");
    cmd->add_option("--sensors", o.sensors, "Sensor count");
  };
  auto* run = app.add_subcommand("run", "Train and evaluate a single (method, sensors, seed) cell");
  common(run);
  run->add_option("--seed", o.seed, "Seed")->each([&](const std::string&) { o.has_seed = true; });
  run->add_option("--method", o.method, "Method id (B1..B6)");
  auto* matrix = app.add_subcommand("matrix", "Run methods x sensor counts x seeds and aggregate");
  common(matrix);
  auto* an = app.add_subcommand("analyze", "Residual profiles and split decision for a coarse checkpoint");
  common(an);
  an->add_option("--checkpoint", checkpoint, "Partition checkpoint JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  configure_allocator();
  try {
    if (*gen) return cmd_generate(scenario_path, field_out);
    if (*sens) return cmd_sensors(field_in, n_sensors, obs_out);
    if (*run) return cmd_run(o);
    if (*matrix) return cmd_matrix(o);
    if (*an) return cmd_analyze(o, checkpoint);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
