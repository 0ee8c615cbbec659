#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "nicp/bench/commands.hpp"
#include "nicp/bench/dataset.hpp"
#include "nicp/geometry/io.hpp"
#include "nicp/geometry/metrics.hpp"
#include "nicp/neural/serialize.hpp"
#include "support/tiny_config.hpp"

using namespace nicp;
using namespace nicp::bench;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// One generated dataset shared by the tests that only read it.
const ExperimentConfig& shared_config() {
  static const ExperimentConfig config = [] {
    auto c = test::tiny_config(test::scratch_dir("bench"));
    cmd_generate(c);
    return c;
  }();
  return config;
}

// Shared config with every standard variant trained for one epoch.
const ExperimentConfig& trained_config() {
  static const ExperimentConfig config = [] {
    const auto& c = shared_config();
    std::vector<std::string> names;
    for (const auto& v : c.variants) names.push_back(v.name);
    cmd_train(c, names);
    return c;
  }();
  return config;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char ch : text) n += ch == '\n';
  return n;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NICP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config survives a JSON round trip") {
  auto c = test::tiny_config("/tmp/x");
  c.nicp.mode = solvers::CorrespondenceMode::Projective;
  c.methods = {"lm", "nicp"};
  const auto back = ExperimentConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
}

TEST_CASE("config hash ignores paths and threads but not the seed") {
  const auto a = test::tiny_config("/tmp/a");
  auto b = test::tiny_config("/tmp/b");
  b.threads = 4;
  CHECK(a.hash() == b.hash());
  b.seed = 6;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("relative config paths resolve against the config location") {
  const json j = {{"dataset", "data"}, {"output", "/abs/out"}, {"seed", 3}};
  const auto c = ExperimentConfig::from_json(j, "/base/dir");
  CHECK(c.dataset == fs::path("/base/dir/data"));
  CHECK(c.output == fs::path("/abs/out"));
  CHECK(c.sequence.seed == 3);
  CHECK(c.nicp.seed == 3);
}

TEST_CASE("invalid configurations are rejected before anything is written") {
  const auto root = test::scratch_dir("invalid");
  auto c = test::tiny_config(root);
  c.sequence.rig.cameras = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  CHECK_THROWS_AS(cmd_generate(c), ValidationError);
  CHECK_FALSE(fs::exists(c.dataset));

  auto d = test::tiny_config(root);
  d.methods = {"nicp", "gauss"};
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = test::tiny_config(root);
  d.benchmark_variant = "missing";
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = test::tiny_config(root);
  d.sequence.frames = 2;
  d.heldout_fraction = 0.1;
  CHECK_THROWS_AS(d.validate(), ValidationError);
  d = test::tiny_config(root);
  d.smoothing_window = 4;
  CHECK_THROWS_AS(d.validate(), ValidationError);
}

TEST_CASE("the split keeps the last fifth for evaluation") {
  const auto s = split_frames(200, 0.2);
  REQUIRE(s.train.size() == 160);
  REQUIRE(s.heldout.size() == 40);
  CHECK(s.train.front() == 0);
  CHECK(s.train.back() == 159);
  CHECK(s.heldout.front() == 160);
  CHECK(s.heldout.back() == 199);
  CHECK(split_frames(10, 0.2).heldout == std::vector<int>{8, 9});
}

TEST_CASE("ablation ordering checks") {
  std::map<std::string, double> good = {
      {"P_N1", 100.0}, {"P_r_N3", 60.0}, {"P_g_N3", 50.0}, {"P_r_g_N1", 70.0}, {"full", 52.0}};
  auto checks = ablation_checks(good);
  CHECK(checks.size() == 7);
  for (const auto& c : checks) CHECK_MESSAGE(c.passed, c.name);

  // Within the band for "<=", but strict comparisons get no band.
  auto tie = good;
  tie["P_r_N3"] = 50.0;
  bool strict_failed = false;
  for (const auto& c : ablation_checks(tie)) {
    if (c.name == "P_g_N3 < P_r_N3") strict_failed = !c.passed;
  }
  CHECK(strict_failed);

  auto worse = good;
  worse["full"] = 56.0;  // more than 5% above P_g_N3
  bool full_failed = false;
  for (const auto& c : ablation_checks(worse)) {
    if (c.name == "full <= P_g_N3") full_failed = !c.passed;
  }
  CHECK(full_failed);

  good.erase("P_N1");
  CHECK_THROWS_AS(ablation_checks(good), std::runtime_error);
}

TEST_CASE("trace lookups by time and threshold") {
  solvers::SolveTrace t;
  t.records = {{0, 0.0, 1.0, 100.0, 0.0}, {1, 0.5, 0.5, 60.0, 1.0}, {2, 1.0, 0.2, 40.0, 1.0}};
  CHECK(mse_at_time(t, 0.0) == 100.0);
  CHECK(mse_at_time(t, 0.7) == 60.0);
  CHECK(mse_at_time(t, 5.0) == 40.0);
  CHECK(time_to_threshold(t, 50.0) == 1.0);
  CHECK(time_to_threshold(t, 10.0) < 0.0);
}

TEST_CASE("generate writes a verifiable, reproducible dataset") {
  const auto& c = shared_config();
  const auto info = read_dataset_info(c.dataset);
  CHECK(info.frame_count == 10);
  CHECK(info.cameras.size() == 3);
  CHECK(info.model->parameter_count() == 72);
  CHECK(verify_dataset(c.dataset).empty());

  const auto f = read_frame(info, 3);
  CHECK(f.id == 3);
  CHECK(f.mesh.vertices.size() == 160);
  CHECK(f.dense.size() == 1500);
  CHECK_FALSE(f.sparse.empty());
  CHECK(f.theta.node_count() == 12);

  auto again = c;
  again.dataset = test::scratch_dir("regen") / "data";
  cmd_generate(again);
  CHECK(read_text(again.dataset / "manifest.json") == read_text(c.dataset / "manifest.json"));

  // Tampering is reported by name.
  const auto victim = again.dataset / frame_directory(2) / "dense.ply";
  {
    std::ofstream out(victim, std::ios::app | std::ios::binary);
    out << 'x';
  }
  const auto bad = verify_dataset(again.dataset);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].find("frame_00002") != std::string::npos);
}

TEST_CASE("missing datasets are reported") {
  auto c = test::tiny_config(test::scratch_dir("nodata"));
  CHECK_THROWS_AS(cmd_train(c, {"full"}), std::runtime_error);
}

TEST_CASE("train writes checksummed weights and one loss row per epoch") {
  const auto& c = trained_config();
  for (const auto& v : c.variants) {
    const auto path = weights_path(c, v.name);
    REQUIRE(fs::exists(path));
    const auto net = load_variant(c, v);
    CHECK(net.spec().use_residual == v.residual);
    CHECK(net.spec().use_gradient == v.gradient);
    CHECK(net.spec().output_dim() == 72);
    const auto csv = read_text(c.output / ("loss_" + v.name + ".csv"));
    CHECK(count_lines(csv) == c.train.epochs + 1);
    CHECK(csv.rfind("epoch,loss_m2\n", 0) == 0);
  }
}

TEST_CASE("variants reach the tracker with their own inputs and iteration counts") {
  const auto& c = trained_config();
  const auto& full = c.variant("full");
  const auto& p1 = c.variant("P_N1");
  CHECK(variant_nicp(c, full).iterations == 3);
  CHECK(variant_nicp(c, p1).iterations == 1);
  CHECK_FALSE(variant_spec(c, p1).use_residual);
  CHECK_FALSE(variant_spec(c, p1).use_gradient);

  auto a = c;
  a.output = test::scratch_dir("track_a");
  fs::create_directories(a.output / "weights");
  for (const auto& v : c.variants) fs::copy_file(weights_path(c, v.name), weights_path(a, v.name));
  cmd_track(a, "full");
  cmd_track(a, "P_N1");
  const auto tf = json::parse(read_text(a.output / "track" / "full" / "track.json"));
  const auto tp = json::parse(read_text(a.output / "track" / "P_N1" / "track.json"));
  REQUIRE(tf.at("frames").size() == 10);
  CHECK(tf.at("iterations") == 3);
  CHECK(tp.at("iterations") == 1);
  CHECK(read_text(a.output / "track" / "full" / "frame_00004.ply") !=
        read_text(a.output / "track" / "P_N1" / "frame_00004.ply"));
}

TEST_CASE("benchmark reports every configured method") {
  auto c = trained_config();
  c.output = test::scratch_dir("benchmark");
  fs::create_directories(c.output / "weights");
  fs::copy_file(weights_path(trained_config(), "full"), weights_path(c, "full"));
  const auto report = cmd_benchmark(c);

  const auto& methods = report.at("methods");
  CHECK(methods.size() == c.methods.size());
  for (const auto& m : c.methods) REQUIRE(methods.contains(m));
  CHECK(report.at("heldout_frames") == json({8, 9}));
  for (const auto& row : methods.at("nicp").at("frames")) CHECK(row.at("steps") == 3);
  for (const auto& row : methods.at("lm").at("frames")) CHECK(row.at("steps") <= c.solvers.lm_iterations);

  // The reported error is recomputed from the saved meshes.
  const auto info = read_dataset_info(c.dataset);
  for (const auto& m : c.methods) {
    for (const auto& row : methods.at(m).at("frames")) {
      const int id = row.at("id");
      const auto saved = geometry::read_ply_mesh(c.output / "benchmark" / m / (frame_directory(id) + ".ply"));
      const double mse = geometry::two_way_mse(saved, read_frame(info, id).mesh, c.mse_samples, c.seed);
      CHECK(std::abs(mse - row.at("final_mse_mm2").get<double>()) <= 1e-9 * std::max(1.0, mse));
      CHECK(fs::exists(c.output / "benchmark" / m / (frame_directory(id) + ".csv")));
    }
  }
  const auto summary = read_text(c.output / "benchmark" / "summary.csv");
  CHECK(count_lines(summary) == static_cast<int>(c.methods.size()) + 1);
  CHECK(report.at("mse_at_nicp_time_mm2").size() == c.methods.size());
}

TEST_CASE("ablation needs every variant and is deterministic") {
  auto c = trained_config();
  c.output = test::scratch_dir("ablation");
  fs::create_directories(c.output / "weights");
  for (const auto& v : c.variants) {
    if (v.name != "P_r_N3") fs::copy_file(weights_path(trained_config(), v.name), weights_path(c, v.name));
  }
  try {
    cmd_ablation(c);
    FAIL("ablation ran without weights");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("P_r_N3") != std::string::npos);
  }

  fs::copy_file(weights_path(trained_config(), "P_r_N3"), weights_path(c, "P_r_N3"));
  const auto report = cmd_ablation(c);
  CHECK(report.at("rows").size() == 5);
  CHECK(report.at("orderings_evaluated") == true);
  CHECK(report.at("checks").size() == 7);
  const auto first_csv = read_text(c.output / "ablation.csv");
  const auto first_json = read_text(c.output / "ablation.json");
  CHECK(count_lines(first_csv) == 6);
  cmd_ablation(c);
  CHECK(read_text(c.output / "ablation.csv") == first_csv);
  CHECK(read_text(c.output / "ablation.json") == first_json);
}

TEST_CASE("CLI exit codes") {
  const auto root = test::scratch_dir("cli");
  auto c = test::tiny_config(root);
  write_text(root / "ok.json", c.to_json().dump(2));
  auto bad = c;
  bad.sequence.rig.cameras = 0;
  write_text(root / "bad.json", bad.to_json().dump(2));

  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("-c " + (root / "bad.json").string() + " generate") == 2);
  CHECK_FALSE(fs::exists(c.dataset));
  CHECK(run_cli("-c " + (root / "missing.json").string() + " generate") == 1);
  write_text(root / "broken.json", "{\"seed\": ");
  CHECK(run_cli("-c " + (root / "broken.json").string() + " generate") == 2);
  CHECK(run_cli("-c " + (root / "ok.json").string() + " train") == 1);  // no dataset yet
  CHECK(run_cli("-c " + (root / "ok.json").string() + " --threads 0 generate") == 2);
  CHECK(run_cli("-c " + (root / "ok.json").string() + " generate") == 0);
  CHECK(verify_dataset(c.dataset).empty());
  CHECK(run_cli("-c " + (root / "ok.json").string() + " train --variant nope") == 2);
}
