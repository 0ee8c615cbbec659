#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nicp/bench/commands.hpp"

using nicp::bench::ExperimentConfig;
using nicp::bench::ValidationError;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::string dataset;
  std::string clock;
};

ExperimentConfig resolve(const GlobalOptions& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(g.config);
  if (g.seed) {
    c.seed = *g.seed;
    c.sequence.seed = *g.seed;
    c.nicp.seed = *g.seed;
  }
  if (g.threads) c.threads = *g.threads;
  if (!g.out.empty()) c.output = g.out;
  if (!g.dataset.empty()) c.dataset = g.dataset;
  if (!g.clock.empty()) c.clock = nicp::bench::parse_clock(g.clock);
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural ICP tracking toolkit: data generation, training, tracking and benchmarks"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("-c,--config", g.config, "Experiment configuration (JSON)");
  app.add_option("--seed", g.seed, "Override the experiment seed");
  app.add_option("--threads", g.threads, "Worker threads (1 gives reproducible timing)");
  app.add_option("--out", g.out, "Output directory for results");
  app.add_option("--dataset", g.dataset, "Dataset directory");
  app.add_option("--clock", g.clock, "Timing clock: virtual or wall")->check(CLI::IsMember({"virtual", "wall"}));

  auto* generate = app.add_subcommand("generate", "Render a synthetic sequence into the dataset directory");
  auto* train = app.add_subcommand("train", "Train update networks on the training split");
  std::vector<std::string> train_variants;
  train->add_option("--variant", train_variants, "Variant(s) to train, or 'all' (default: the benchmark variant)");
  auto* track = app.add_subcommand("track", "Track every dataset frame with a trained network");
  std::string track_variant;
  track->add_option("--variant", track_variant, "Variant to use (default: the benchmark variant)");
  auto* benchmark = app.add_subcommand("benchmark", "Compare N-ICP with the classical solvers on held-out frames");
  auto* ablation = app.add_subcommand("ablation", "Evaluate every trained variant on held-out frames");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const ExperimentConfig config = resolve(g);
    nlohmann::json summary;
    if (generate->parsed()) {
      summary = nicp::bench::cmd_generate(config);
      summary.erase("files");
    } else if (train->parsed()) {
      std::vector<std::string> names = train_variants;
      if (names.empty()) names.push_back(config.benchmark_variant);
      if (names.size() == 1 && names[0] == "all") {
        names.clear();
        for (const auto& v : config.variants) names.push_back(v.name);
      }
      summary = nicp::bench::cmd_train(config, names);
    } else if (track->parsed()) {
      summary = nicp::bench::cmd_track(config, track_variant.empty() ? config.benchmark_variant : track_variant);
    } else if (benchmark->parsed()) {
      const auto report = nicp::bench::cmd_benchmark(config);
      for (const auto& [method, entry] : report.at("methods").items()) {
        summary[method] = {{"mean_final_mse_mm2", entry.at("mean_final_mse_mm2")},
                           {"mean_time_s", entry.at("mean_time_s")}};
      }
      summary["mse_at_nicp_time_mm2"] = report.at("mse_at_nicp_time_mm2");
    } else if (ablation->parsed()) {
      const auto report = nicp::bench::cmd_ablation(config);
      for (const auto& row : report.at("rows")) summary[row.at("variant").get<std::string>()] = row.at("mean_mse_mm2");
      summary["orderings_hold"] = report.at("orderings_hold");
    }
    std::cout << summary.dump(2) << '\n';
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
