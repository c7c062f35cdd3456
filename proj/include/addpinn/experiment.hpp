#pragma once

#include "addpinn/evaluation.hpp"
#include "addpinn/field.hpp"
#include "addpinn/lwr.hpp"
#include "addpinn/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace addpinn {

/// Malformed or inconsistent configuration input (the CLI maps it to exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint64_t> default_seeds();

struct DatasetSpec {
  std::string name;
  std::optional<ScenarioSpec> scenario;
  std::filesystem::path field;  // used when no scenario is given
};

struct ExperimentConfig {
  DatasetSpec dataset;
  std::vector<MethodSpec> methods;
  std::vector<int> sensor_counts{5};
  std::vector<std::uint64_t> seeds = default_seeds();
  Hyperparams hyper;  // profile plus overrides, before scaling
  double scale = 1.0;
  std::filesystem::path out_dir = "results";

  Hyperparams effective_hyper() const { return hyper.scaled(scale); }
  void validate() const;
};

/// Parses a JSON document; throws ConfigError on syntax errors, unknown keys or bad values.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
ScenarioSpec load_scenario(const std::filesystem::path& path);

/// Applies a JSON object of hyperparameter overrides ("epochs_total", "causal": {...}, ...).
Hyperparams apply_overrides(Hyperparams base, const std::string& overrides_json);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

/// Ground truth of the dataset (Godunov solve for scenarios, CSV otherwise).
SpeedField load_dataset(const DatasetSpec& spec);

struct PreparedData {
  SpeedField truth;
  ObservationSet obs;
  NondimCoeffs coeffs;
};

PreparedData prepare(const SpeedField& truth, int n_sensors);

struct CellResult {
  MethodSpec method;
  std::string dataset;
  int n_sensors = 0;
  std::uint64_t seed = 0;
  Hyperparams hyper;
  bool ok = false;
  std::string error;
  RunLog log;
  EvalReport report;
  std::optional<Partition> model;
  std::optional<Partition> stage1;
};

CellResult run_cell(const PreparedData& data, const std::string& dataset, const MethodSpec& method, int n_sensors,
                    const Hyperparams& hyper, std::uint64_t seed);

/// Method id plus non-default B6 mode/direction, e.g. "B6_addpinn-temporal".
std::string method_label(const MethodSpec& m);

std::string run_json(const CellResult& cell);
std::string cell_stem(const CellResult& cell);

/// Writes the run JSON and model checkpoints of one cell under out_dir.
void write_cell(const CellResult& cell, const std::filesystem::path& out_dir);

/// Keeps large training buffers on the heap between epochs (glibc only; no-op elsewhere).
void configure_allocator();

/// Worker count for matrix runs from ADDPINN_THREADS (default 1).
int thread_count_from_env();

struct MatrixResult {
  std::vector<CellResult> cells;
  std::optional<Aggregate> aggregate;
  std::size_t failed = 0;
};

/// Runs methods x sensor counts x seeds, writes per-run files plus aggregate.csv and comparisons.csv.
MatrixResult run_matrix(const ExperimentConfig& cfg, int threads);

struct AnalysisResult {
  ResidualProfile x_profile;
  ResidualProfile t_profile;
  SplitDecision decision;
};

AnalysisResult analyze(const Partition& coarse, const PreparedData& data, DecompositionMode mode, Direction direction,
                       const DecompositionConfig& cfg);

std::string profile_csv(const ResidualProfile& p);

}  // namespace addpinn
