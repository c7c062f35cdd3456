#include "addpinn/experiment.hpp"
#include "addpinn/network.hpp"
#include "addpinn/partition.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace addpinn;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "addpinn_cli_tests";

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ADDPINN_CLI) + " " + args + " > " + (kWork / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write_file(const std::string& name, const std::string& text) {
  fs::create_directories(kWork);
  const fs::path p = kWork / name;
  std::ofstream(p) << text;
  return p;
}

const char* kTinyHyper = R"("hyper": {"epochs_total": 30, "epochs_stage1": 15, "steplr_step": 10, "n_colloc": 300,
  "batch_data": 64, "batch_colloc": 64, "batch_colloc_min": 32, "rar_period": 10, "rar_candidates": 100,
  "rar_added": 50, "child_init": {"epochs": 5, "points": 100}, "interfaces": {"n_samples": 20},
  "decomposition": {"n_x": 40, "n_t": 20}, "parent_widths": [2, 16, 8, 8, 1], "child_widths": [2, 16, 8, 1]})";

std::string tiny_config(const std::string& methods, const std::string& sensors, const std::string& seeds,
                        const std::string& out) {
  return R"({"dataset": {"name": "riemann", "scenario": {"kind": "riemann_shock", "n_cells": 50, "n_steps": 200}},
  "methods": )" + methods + R"(, "sensors": )" + sensors + R"(, "seeds": )" + seeds + ", " + kTinyHyper +
         R"(, "out": ")" + (kWork / out).string() + "\"}";
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(read_text(p)); }

}  // namespace

TEST_CASE("malformed input exits with code 2") {
  const auto bad = write_file("bad.json", "{\"kind\": \"riemann_shock\",");
  CHECK(run_cli("generate --config " + bad.string() + " --out " + (kWork / "x.csv").string()) == 2);
  CHECK(run_cli("run --config " + bad.string()) == 2);
  const auto unknown = write_file("unknown.json", R"({"dataset": {"name": "a"}, "methods": ["B2"], "bogus": 1})");
  CHECK(run_cli("run --config " + unknown.string()) == 2);
  CHECK(run_cli("frobnicate") == 2);
}

TEST_CASE("generate writes Godunov fields") {
  const auto uni = write_file("uniform.json", R"({"kind": "uniform", "rho_left": 0.3, "n_cells": 40, "n_steps": 100})");
  const fs::path uni_csv = kWork / "uniform.csv";
  REQUIRE(run_cli("generate --config " + uni.string() + " --out " + uni_csv.string()) == 0);
  const SpeedField u = read_speed_field_csv(uni_csv);
  CHECK((u.values().array() - u(0, 0)).abs().maxCoeff() <= 1e-12);

  const auto rie = write_file("riemann.json", R"({"kind": "riemann_shock", "n_cells": 50, "n_steps": 200})");
  const fs::path rie_csv = kWork / "riemann.csv";
  REQUIRE(run_cli("generate --config " + rie.string() + " --out " + rie_csv.string()) == 0);
  const SpeedField r = read_speed_field_csv(rie_csv);
  const auto last = r.values().col(r.n_steps() - 1);
  bool monotone = true;
  for (Eigen::Index i = 1; i < last.size(); ++i) monotone = monotone && last(i) <= last(i - 1) + 1e-12;
  CHECK(monotone);
  CHECK(last(0) - last(last.size() - 1) > 30.0);

  const fs::path obs = kWork / "obs.json";
  REQUIRE(run_cli("sensors --field " + rie_csv.string() + " --n 5 --out " + obs.string()) == 0);
  CHECK(observations_from_json(read_text(obs)).records.size() == 1000);
}

TEST_CASE("run writes a log and replays identically") {
  const auto cfg = write_file("run.json", tiny_config(R"(["B1_nn", "B6_addpinn"])", "[5]", "[42]", "run"));
  REQUIRE(run_cli("run --config " + cfg.string() + " --method B1") == 0);
  const auto b1 = read_json(kWork / "run" / "B1_nn_riemann_ns5_seed42.json");
  CHECK(b1.contains("eval"));
  for (const auto& p : b1["loss_parts"]["pde"]) CHECK(p.get<double>() == 0.0);

  REQUIRE(run_cli("run --config " + cfg.string() + " --method B6 --mode decomposition_enabled") == 0);
  const fs::path b6_path = kWork / "run" / "B6_addpinn-decomposition_enabled_riemann_ns5_seed42.json";
  const auto first = read_json(b6_path);
  CHECK(first["decomposition"]["decided"].get<bool>());
  CHECK(first["decomposition"].contains("S"));
  CHECK(first["decomposition"]["splits"].size() == 1);
  REQUIRE(run_cli("run --config " + cfg.string() + " --method B6 --mode decomposition_enabled") == 0);
  CHECK(read_json(b6_path)["eval"] == first["eval"]);
}

TEST_CASE("matrix covers the cartesian product") {
  const auto cfg = write_file("matrix.json", tiny_config(R"(["B1", "B2"])", "[3, 5]", "[1, 2, 3]", "matrix"));
  REQUIRE(run_cli("matrix --config " + cfg.string()) == 0);
  int runs = 0;
  for (const auto& e : fs::directory_iterator(kWork / "matrix")) {
    const auto name = e.path().filename().string();
    if (name.ends_with(".json") && name.find(".model") == std::string::npos && name.find(".stage1") == std::string::npos)
      ++runs;
  }
  CHECK(runs == 12);
  std::istringstream csv(read_text(kWork / "matrix" / "aggregate.csv"));
  std::string line;
  std::getline(csv, line);
  std::vector<std::string> keys;
  while (std::getline(csv, line)) {
    std::istringstream row(line);
    std::string method, dataset, ns;
    std::getline(row, method, ',');
    std::getline(row, dataset, ',');
    std::getline(row, ns, ',');
    keys.push_back(method + "/" + ns);
  }
  CHECK(keys == std::vector<std::string>{"B1_nn/3", "B1_nn/5", "B2_pinn/3", "B2_pinn/5"});
}

TEST_CASE("analyze emits flat profiles for a zero-residual checkpoint") {
  const auto cfg = write_file("analyze.json", tiny_config(R"(["B6"])", "[5]", "[1]", "analyze"));
  PinnNetwork net = init_network(Architecture{{2, 16, 8, 8, 1}, 10.0}, 1);
  net.weights.back().setZero();
  net.biases.back()(0) = 0.5;
  const auto ckpt = write_file("flat.model.json", partition_to_json(Partition::single(net)));
  REQUIRE(run_cli("analyze --config " + cfg.string() + " --checkpoint " + ckpt.string()) == 0);
  const auto decision = read_json(kWork / "analyze" / "decision.json");
  CHECK(decision["x_peaks"].empty());
  const std::string profile = read_text(kWork / "analyze" / "residual_x.csv");
  REQUIRE(run_cli("analyze --config " + cfg.string() + " --checkpoint " + ckpt.string()) == 0);
  CHECK(read_text(kWork / "analyze" / "residual_x.csv") == profile);

  const auto wrong = write_file(
      "wrong.model.json", partition_to_json(Partition::single(init_network(Architecture{{2, 8, 4, 1}, 10.0}, 1))));
  CHECK(run_cli("analyze --config " + cfg.string() + " --checkpoint " + wrong.string()) == 1);
}
