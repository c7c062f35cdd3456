#include "addpinn/experiment.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace addpinn {

namespace {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void apply_json_overrides(Hyperparams& h, const json& j) {
  check_keys(j,
             {"epochs_total", "epochs_stage1", "lr_stage1", "lr_stage2", "steplr_step", "steplr_gamma", "clip_norm",
              "batch_data", "batch_colloc", "batch_colloc_min", "n_colloc", "rar_period", "rar_candidates",
              "rar_added", "eps_visc", "shock_speed_lr", "causal", "weights", "decomposition", "child_init",
              "interfaces", "parent_widths", "child_widths", "fourier_sigma"},
             "hyper");
  take(j, "epochs_total", h.epochs_total);
  take(j, "epochs_stage1", h.epochs_stage1);
  take(j, "lr_stage1", h.lr_stage1);
  take(j, "lr_stage2", h.lr_stage2);
  take(j, "steplr_step", h.steplr_step);
  take(j, "steplr_gamma", h.steplr_gamma);
  take(j, "clip_norm", h.clip_norm);
  take(j, "batch_data", h.batch_data);
  take(j, "batch_colloc", h.batch_colloc);
  take(j, "batch_colloc_min", h.batch_colloc_min);
  take(j, "n_colloc", h.n_colloc);
  take(j, "rar_period", h.rar_period);
  take(j, "rar_candidates", h.rar_candidates);
  take(j, "rar_added", h.rar_added);
  take(j, "eps_visc", h.eps_visc);
  take(j, "shock_speed_lr", h.shock_speed_lr);
  if (j.contains("causal")) {
    const auto& c = j.at("causal");
    check_keys(c, {"n_bins", "epsilon"}, "hyper.causal");
    take(c, "n_bins", h.causal.n_bins);
    take(c, "epsilon", h.causal.epsilon);
  }
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    check_keys(w, {"data", "pde", "interface"}, "hyper.weights");
    take(w, "data", h.weights.data);
    take(w, "pde", h.weights.pde);
    take(w, "interface", h.weights.interface);
  }
  if (j.contains("decomposition")) {
    const auto& d = j.at("decomposition");
    check_keys(d, {"tau_shock", "delta_min", "n_x", "n_t", "max_subdomains"}, "hyper.decomposition");
    take(d, "tau_shock", h.decomposition.tau_shock);
    take(d, "delta_min", h.decomposition.delta_min);
    take(d, "n_x", h.decomposition.n_x);
    take(d, "n_t", h.decomposition.n_t);
    take(d, "max_subdomains", h.decomposition.max_subdomains);
  }
  if (j.contains("child_init")) {
    const auto& c = j.at("child_init");
    check_keys(c, {"epochs", "points", "lr"}, "hyper.child_init");
    take(c, "epochs", h.child_init.epochs);
    take(c, "points", h.child_init.points);
    take(c, "lr", h.child_init.lr);
  }
  if (j.contains("interfaces")) {
    const auto& c = j.at("interfaces");
    check_keys(c, {"n_samples", "delta_shock", "w_entropy"}, "hyper.interfaces");
    take(c, "n_samples", h.interfaces.n_samples);
    take(c, "delta_shock", h.interfaces.delta_shock);
    take(c, "w_entropy", h.interfaces.w_entropy);
  }
  take(j, "parent_widths", h.parent_arch.widths);
  take(j, "child_widths", h.child_arch.widths);
  if (j.contains("fourier_sigma")) {
    h.parent_arch.fourier_sigma = j.at("fourier_sigma").get<double>();
    h.child_arch.fourier_sigma = h.parent_arch.fourier_sigma;
  }
}

MethodSpec method_from_json(const json& j) {
  MethodSpec m;
  if (j.is_string()) {
    m.id = method_from_string(j.get<std::string>());
    return m;
  }
  check_keys(j, {"id", "mode", "direction"}, "methods[]");
  m.id = method_from_string(j.at("id").get<std::string>());
  if (j.contains("mode")) m.mode = mode_from_string(j.at("mode").get<std::string>());
  if (j.contains("direction")) m.direction = direction_from_string(j.at("direction").get<std::string>());
  return m;
}

json hyper_to_json(const Hyperparams& h) {
  return {{"epochs_total", h.epochs_total},
          {"epochs_stage1", h.epochs_stage1},
          {"lr_stage1", h.lr_stage1},
          {"lr_stage2", h.lr_stage2},
          {"steplr_step", h.steplr_step},
          {"steplr_gamma", h.steplr_gamma},
          {"clip_norm", h.clip_norm},
          {"batch_data", h.batch_data},
          {"batch_colloc", h.batch_colloc},
          {"batch_colloc_min", h.batch_colloc_min},
          {"n_colloc", h.n_colloc},
          {"rar_period", h.rar_period},
          {"rar_candidates", h.rar_candidates},
          {"rar_added", h.rar_added},
          {"eps_visc", h.eps_visc},
          {"shock_speed_lr", h.shock_speed_lr},
          {"causal", {{"n_bins", h.causal.n_bins}, {"epsilon", h.causal.epsilon}}},
          {"weights", {{"data", h.weights.data}, {"pde", h.weights.pde}, {"interface", h.weights.interface}}},
          {"decomposition",
           {{"tau_shock", h.decomposition.tau_shock},
            {"delta_min", h.decomposition.delta_min},
            {"n_x", h.decomposition.n_x},
            {"n_t", h.decomposition.n_t},
            {"max_subdomains", h.decomposition.max_subdomains}}},
          {"child_init",
           {{"epochs", h.child_init.epochs}, {"points", h.child_init.points}, {"lr", h.child_init.lr}}},
          {"interfaces",
           {{"n_samples", h.interfaces.n_samples},
            {"delta_shock", h.interfaces.delta_shock},
            {"w_entropy", h.interfaces.w_entropy}}},
          {"parent_widths", h.parent_arch.widths},
          {"child_widths", h.child_arch.widths},
          {"fourier_sigma", h.parent_arch.fourier_sigma}};
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + ": malformed JSON: " + e.what());
  }
}

}  // namespace

std::vector<std::uint64_t> default_seeds() { return {42, 123, 456, 789, 1024, 2048, 3000, 4096, 5555, 7777}; }

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: no methods");
  if (seeds.empty()) throw ConfigError("config: no seeds");
  if (sensor_counts.empty()) throw ConfigError("config: no sensor counts");
  for (int n : sensor_counts)
    if (n < 1) throw ConfigError("config: sensor counts must be positive");
  if (!(scale > 0.0) || scale > 1.0) throw ConfigError("config: scale must lie in (0, 1]");
  if (!dataset.scenario && dataset.field.empty()) throw ConfigError("config: dataset needs a scenario or a field");
  try {
    effective_hyper().validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = parse_json(text, "config");
  ExperimentConfig cfg;
  try {
    check_keys(j, {"dataset", "methods", "sensors", "seeds", "profile", "hyper", "scale", "out"}, "config");
    const std::string profile = j.value("profile", std::string("full"));
    if (profile == "desk") {
      cfg.hyper = Hyperparams::desk();
    } else if (profile != "full") {
      throw ConfigError("config: unknown profile '" + profile + "'");
    }
    if (j.contains("hyper")) apply_json_overrides(cfg.hyper, j.at("hyper"));
    const auto& d = j.at("dataset");
    check_keys(d, {"name", "scenario", "field"}, "dataset");
    if (d.contains("scenario")) {
      cfg.dataset.scenario = scenario_spec_from_json(d.at("scenario").dump());
      cfg.dataset.name = to_string(cfg.dataset.scenario->kind);
    }
    if (d.contains("field")) {
      cfg.dataset.field = d.at("field").get<std::string>();
      cfg.dataset.name = cfg.dataset.field.stem().string();
    }
    take(d, "name", cfg.dataset.name);
    cfg.methods.clear();
    if (j.contains("methods"))
      for (const auto& m : j.at("methods")) cfg.methods.push_back(method_from_json(m));
    else
      cfg.methods.push_back({});
    take(j, "sensors", cfg.sensor_counts);
    take(j, "seeds", cfg.seeds);
    take(j, "scale", cfg.scale);
    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

ExperimentConfig load_config(const std::filesystem::path& path) { return config_from_json(read_text(path)); }

ScenarioSpec load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  parse_json(text, "scenario");
  try {
    return scenario_spec_from_json(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

Hyperparams apply_overrides(Hyperparams base, const std::string& overrides_json) {
  const json j = parse_json(overrides_json, "hyper");
  try {
    apply_json_overrides(base, j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("hyper: ") + e.what());
  }
  return base;
}

SpeedField load_dataset(const DatasetSpec& spec) {
  if (spec.scenario) return godunov_solve(make_scenario(*spec.scenario)).speed;
  return read_speed_field_csv(spec.field);
}

PreparedData prepare(const SpeedField& truth, int n_sensors) {
  PreparedData d{truth, {}, {}};
  const NormStats stats = compute_stats(truth);
  d.obs = extract_observations(truth, place_sensors(truth.n_cells(), n_sensors), stats);
  d.coeffs = nondim_coeffs(stats, truth.x_range(), truth.t_range());
  return d;
}

CellResult run_cell(const PreparedData& data, const std::string& dataset, const MethodSpec& method, int n_sensors,
                    const Hyperparams& hyper, std::uint64_t seed) {
  CellResult cell;
  cell.method = method;
  cell.dataset = dataset;
  cell.n_sensors = n_sensors;
  cell.seed = seed;
  cell.hyper = hyper;
  try {
    TrainResult r = train(method, data.obs, data.coeffs, hyper, seed);
    cell.report = evaluate(r.model, data.truth, data.obs.stats);
    cell.report.train_time_s = r.log.time_s;
    cell.log = std::move(r.log);
    cell.model = std::move(r.model);
    cell.stage1 = std::move(r.stage1);
    cell.ok = true;
  } catch (const TrainingDiverged& e) {
    cell.log = e.log();
    cell.error = e.what();
  } catch (const std::exception& e) {
    cell.error = e.what();
    cell.log.method = method;
    cell.log.seed = seed;
  }
  return cell;
}

std::string method_label(const MethodSpec& m) {
  std::string label = to_string(m.id);
  if (m.id == MethodId::B6_addpinn) {
    if (m.mode != DecompositionMode::shock_screened) label += "-" + to_string(m.mode);
    if (m.direction != Direction::spatial) label += "-" + to_string(m.direction);
  }
  return label;
}

std::string cell_stem(const CellResult& cell) {
  return method_label(cell.method) + "_" + cell.dataset + "_ns" + std::to_string(cell.n_sensors) + "_seed" + std::to_string(cell.seed);
}

std::string run_json(const CellResult& cell) {
  const auto& log = cell.log;
  json j;
  j["method"] = to_string(cell.method.id);
  j["mode"] = to_string(cell.method.mode);
  j["direction"] = to_string(cell.method.direction);
  j["dataset"] = cell.dataset;
  j["n_sensors"] = cell.n_sensors;
  j["seed"] = cell.seed;
  j["status"] = cell.ok ? "ok" : (log.diverged ? "diverged" : "failed");
  if (!cell.error.empty()) j["error"] = cell.error;

  const auto& d = log.decision;
  json dec = {{"made", log.decision_made}, {"decided", d.decomposed}, {"S", d.indicator},
              {"direction", to_string(d.direction)}, {"x_splits", d.x_splits}, {"t_splits", d.t_splits},
              {"x_peaks", d.x_peaks}, {"t_peaks", d.t_peaks}, {"reason", d.reason}};
  dec["splits"] = d.direction == Direction::temporal ? d.t_splits : d.x_splits;
  j["decomposition"] = dec;

  std::vector<double> totals, data, pde, iface, lr;
  for (const auto& e : log.epochs) {
    totals.push_back(e.total);
    data.push_back(e.data);
    pde.push_back(e.pde);
    iface.push_back(e.interface);
    lr.push_back(e.lr);
  }
  j["losses"] = totals;
  j["loss_parts"] = {{"data", data}, {"pde", pde}, {"interface", iface}};
  j["lr"] = lr;
  j["stage1_last_loss"] = log.stage1_last_loss;
  j["stage2_first_loss"] = log.stage2_first_loss;
  j["child_init"] = {{"initial_mse", log.child_init.initial_mse},
                     {"final_mse", log.child_init.final_mse},
                     {"rms_gap", log.child_init.rms_gap}};
  j["interfaces"] = {{"shock_speed", log.shock_speeds},
                     {"shock_steps", log.shock_steps},
                     {"smooth_steps", log.smooth_steps}};
  json rounds = json::array();
  for (const auto& r : log.rar_rounds)
    rounds.push_back({{"epoch", r.epoch}, {"subdomain", r.subdomain}, {"added", r.added},
                      {"min_added", r.min_added}, {"max_rejected", r.max_rejected}});
  j["rar_rounds"] = rounds;
  j["pools"] = {{"initial", log.initial_pool_sizes}, {"final", log.final_pool_sizes}};
  j["time_s"] = log.time_s;
  j["hyper"] = hyper_to_json(cell.hyper);
  if (cell.ok) {
    json zones = json::object();
    for (std::size_t z = 0; z < 3; ++z)
      if (cell.report.zone_mae[z])
        zones[to_string(static_cast<Zone>(z))] = {{"mae", *cell.report.zone_mae[z]},
                                                  {"count", cell.report.zone_counts[z]}};
    j["eval"] = {{"rel_l2", cell.report.rel_l2_pct},
                 {"rmse", cell.report.rmse_mph},
                 {"mae", cell.report.mae_mph},
                 {"zones", zones}};
  }
  return j.dump(1);
}

void write_cell(const CellResult& cell, const std::filesystem::path& out_dir) {
  const std::string stem = cell_stem(cell);
  write_text(out_dir / (stem + ".json"), run_json(cell));
  if (cell.model) write_text(out_dir / (stem + ".model.json"), partition_to_json(*cell.model));
  if (cell.stage1) write_text(out_dir / (stem + ".stage1.json"), partition_to_json(*cell.stage1));
}

void configure_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 256 << 20);
  mallopt(M_TRIM_THRESHOLD, 512 << 20);
#endif
}

int thread_count_from_env() {
  const char* v = std::getenv("ADDPINN_THREADS");
  if (!v || !*v) return 1;
  try {
    return std::max(1, std::stoi(v));
  } catch (const std::exception&) {
    return 1;
  }
}

MatrixResult run_matrix(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  const Hyperparams hyper = cfg.effective_hyper();
  const SpeedField truth = load_dataset(cfg.dataset);
  std::map<int, PreparedData> prepared;
  for (int n : cfg.sensor_counts) prepared.emplace(n, prepare(truth, n));

  struct Job {
    MethodSpec method;
    int n_sensors;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& m : cfg.methods)
    for (int n : cfg.sensor_counts)
      for (auto s : cfg.seeds) jobs.push_back({m, n, s});

  MatrixResult result;
  result.cells.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex io;
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      CellResult cell = run_cell(prepared.at(job.n_sensors), cfg.dataset.name, job.method, job.n_sensors, hyper,
                                 job.seed);
      {
        std::lock_guard<std::mutex> lock(io);
        write_cell(cell, cfg.out_dir);
      }
      cell.model.reset();
      cell.stage1.reset();
      result.cells[i] = std::move(cell);
    }
  };
  const int n_workers = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<RunSummary> summaries;
  for (const auto& c : result.cells) {
    if (!c.ok) {
      ++result.failed;
      continue;
    }
    summaries.push_back({method_label(c.method), c.dataset, c.n_sensors, c.seed, c.report.rel_l2_pct, c.report.rmse_mph});
  }
  if (!summaries.empty()) {
    try {
      result.aggregate = aggregate(summaries);
      write_text(cfg.out_dir / "aggregate.csv", aggregate_csv(*result.aggregate));
      write_text(cfg.out_dir / "comparisons.csv", comparisons_csv(*result.aggregate));
    } catch (const std::invalid_argument&) {
      // unbalanced after failures; per-run files are still on disk
    }
  }
  return result;
}

AnalysisResult analyze(const Partition& coarse, const PreparedData& data, DecompositionMode mode, Direction direction,
                       const DecompositionConfig& cfg) {
  AnalysisResult a;
  const Eigen::MatrixXd grid = residual_grid(coarse, data.coeffs, cfg.n_x, cfg.n_t);
  a.x_profile = profile_from_residuals(grid, Axis::x);
  a.t_profile = profile_from_residuals(grid, Axis::t);
  a.decision = decide(data.obs, coarse, data.coeffs, mode, direction, cfg);
  return a;
}

std::string profile_csv(const ResidualProfile& p) {
  std::ostringstream out;
  out.precision(12);
  out << (p.axis == Axis::x ? "x" : "t") << ",R,R_smoothed\n";
  for (std::size_t i = 0; i < p.values.size(); ++i)
    out << p.positions[i] << ',' << p.values[i] << ',' << p.smoothed[i] << '\n';
  return out.str();
}

}  // namespace addpinn
