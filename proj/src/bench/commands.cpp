#include "nicp/bench/commands.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "nicp/geometry/io.hpp"
#include "nicp/geometry/metrics.hpp"
#include "nicp/neural/serialize.hpp"
#include "nicp/nicp/smoothing.hpp"
#include "nicp/nicp/track.hpp"
#include "nicp/nicp/train.hpp"
#include "nicp/solvers/lbfgs.hpp"
#include "nicp/solvers/lm.hpp"
#include "nicp/solvers/nlcg.hpp"

namespace nicp::bench {

namespace fs = std::filesystem;
using nlohmann::json;
using solvers::format_double;
using solvers::SolveTrace;

namespace {

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to per-index slots; the first exception is rethrown afterwards.
template <typename Fn>
void parallel_for(int n, int threads, Fn fn) {
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(nicp_bench_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

solvers::TraceOptions trace_options(const ExperimentConfig& config, const geometry::TriMesh& reference) {
  solvers::TraceOptions t;
  t.reference = std::make_shared<const geometry::TriMesh>(reference);
  t.mse_samples = config.mse_samples;
  t.mse_seed = config.seed;
  t.clock = config.clock;
  return t;
}

solvers::IcpProblem icp_problem(const ExperimentConfig& config, const DatasetInfo& info, const FrameRecord& frame) {
  solvers::IcpProblem p;
  p.target = frame.sparse;
  p.model = info.model;
  p.pose = frame.pose;
  p.mode = config.nicp.mode;
  p.cameras = info.cameras;
  p.reg_weight = config.nicp.reg_weight;
  return p;
}

std::string frame_file(int id, const char* extension) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%05d.%s", id, extension);
  return buf;
}

double final_mse(const ExperimentConfig& config, const geometry::TriMesh& mesh, const geometry::TriMesh& reference) {
  return geometry::two_way_mse(mesh, reference, config.mse_samples, config.seed);
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? std::nan("") : s / static_cast<double>(v.size());
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

struct MethodRun {
  SolveTrace trace;
  geometry::TriMesh mesh;
  double final_mse = 0.0;
};

// N-ICP over the held-out frames for one variant.
std::vector<MethodRun> run_nicp(const ExperimentConfig& config, const DatasetInfo& info,
                                const std::vector<FrameRecord>& frames, const Variant& variant) {
  const auto network = load_variant(config, variant);
  const auto nicp = variant_nicp(config, variant);
  std::vector<MethodRun> runs(frames.size());
  parallel_for(static_cast<int>(frames.size()), config.threads, [&](int i) {
    const auto& f = frames[static_cast<std::size_t>(i)];
    auto result = tracking::track(network, f.sparse, f.pose, info.model, nicp, trace_options(config, f.mesh),
                                  info.cameras);
    runs[static_cast<std::size_t>(i)] = {std::move(result.trace), std::move(result.mesh), 0.0};
  });
  for (std::size_t i = 0; i < frames.size(); ++i) runs[i].final_mse = final_mse(config, runs[i].mesh, frames[i].mesh);
  return runs;
}

std::vector<MethodRun> run_classical(const ExperimentConfig& config, const DatasetInfo& info,
                                     const std::vector<FrameRecord>& frames, const std::string& method) {
  std::vector<MethodRun> runs(frames.size());
  parallel_for(static_cast<int>(frames.size()), config.threads, [&](int i) {
    const auto& f = frames[static_cast<std::size_t>(i)];
    const auto problem = icp_problem(config, info, f);
    const auto trace = trace_options(config, f.mesh);
    SolveTrace t;
    if (method == "lm") {
      solvers::LmConfig c;
      c.max_iterations = config.solvers.lm_iterations;
      c.initial_damping = config.solvers.lm_damping;
      c.trace = trace;
      t = solvers::solve_lm(problem, c);
    } else if (method == "lbfgs") {
      solvers::LbfgsConfig c;
      c.max_iterations = config.solvers.lbfgs_iterations;
      c.memory = config.solvers.lbfgs_memory;
      c.trace = trace;
      t = solvers::solve_lbfgs(problem, c);
    } else if (method == "nlcg") {
      solvers::NlcgConfig c;
      c.max_iterations = config.solvers.nlcg_iterations;
      c.trace = trace;
      t = solvers::solve_nlcg(problem, c);
    } else {
      throw ValidationError("unknown method '" + method + "'");
    }
    deform::PosedModel posed(info.model, f.pose);
    auto& run = runs[static_cast<std::size_t>(i)];
    run.mesh = posed.mesh(t.final_params);
    run.trace = std::move(t);
  });
  for (std::size_t i = 0; i < frames.size(); ++i) runs[i].final_mse = final_mse(config, runs[i].mesh, frames[i].mesh);
  return runs;
}

std::vector<FrameRecord> load_frames(const DatasetInfo& info, const std::vector<int>& ids) {
  std::vector<FrameRecord> frames;
  frames.reserve(ids.size());
  for (int id : ids) frames.push_back(read_frame(info, id));
  return frames;
}

}  // namespace

neural::NetworkSpec variant_spec(const ExperimentConfig& config, const Variant& variant) {
  auto spec = neural::NetworkSpec::standard(config.node_count);
  spec.use_residual = variant.residual;
  spec.use_gradient = variant.gradient;
  spec.residual_scale = config.train.residual_scale;
  spec.gradient_scale = config.train.gradient_scale;
  return spec;
}

tracking::NicpConfig variant_nicp(const ExperimentConfig& config, const Variant& variant) {
  auto nicp = config.nicp;
  nicp.iterations = variant.iterations;
  nicp.seed = config.seed;
  return nicp;
}

fs::path weights_path(const ExperimentConfig& config, const std::string& variant) {
  return config.output / "weights" / (variant + ".bin");
}

neural::UpdateNetwork load_variant(const ExperimentConfig& config, const Variant& variant) {
  const auto path = weights_path(config, variant.name);
  if (!fs::exists(path)) {
    throw std::runtime_error("no trained weights for variant '" + variant.name + "' (expected " + path.string() +
                             "; run train first)");
  }
  auto network = neural::load_weights(path);
  const auto expected = variant_spec(config, variant);
  if (network.spec().to_json() != expected.to_json()) {
    throw std::runtime_error("weights for variant '" + variant.name + "' do not match the configured network");
  }
  return network;
}

double mse_at_time(const SolveTrace& trace, double time_s) {
  if (trace.records.empty()) throw std::invalid_argument("mse_at_time: empty trace");
  double value = trace.records.front().mse_mm2;
  for (const auto& r : trace.records) {
    if (r.time_s > time_s) break;
    value = r.mse_mm2;
  }
  return value;
}

double time_to_threshold(const SolveTrace& trace, double threshold) {
  for (const auto& r : trace.records) {
    if (r.mse_mm2 <= threshold) return r.time_s;
  }
  return -1.0;
}

std::vector<OrderingCheck> ablation_checks(const std::map<std::string, double>& mse, double tolerance) {
  auto get = [&](const std::string& name) {
    const auto it = mse.find(name);
    if (it == mse.end()) throw std::runtime_error("ablation: missing variant '" + name + "'");
    return it->second;
  };
  std::vector<OrderingCheck> checks;
  auto le = [&](const std::string& a, const std::string& b) {
    const double x = get(a), y = get(b);
    checks.push_back({a + " <= " + b, "<=", x, y, x <= (1.0 + tolerance) * y});
  };
  auto lt = [&](const std::string& a, const std::string& b) {
    const double x = get(a), y = get(b);
    checks.push_back({a + " < " + b, "<", x, y, x < y});
  };
  le("full", "P_g_N3");
  lt("P_g_N3", "P_r_N3");
  lt("full", "P_r_g_N1");
  for (const auto& [name, value] : mse) {
    if (name != "P_N1") le(name, "P_N1");
  }
  return checks;
}

json environment_fingerprint(const ExperimentConfig& config) {
  std::ostringstream eigen;
  eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  return {{"compiler", __VERSION__},
          {"cxx_standard", static_cast<long>(__cplusplus)},
          {"eigen", eigen.str()},
#ifdef NDEBUG
          {"build", "release"},
#else
          {"build", "debug"},
#endif
          {"simd", Eigen::SimdInstructionSetsInUse()},
          {"clock", clock_name(config.clock)},
          {"threads", config.threads}};
}

json cmd_generate(const ExperimentConfig& config) {
  config.validate();
  const auto model = build_model(config);
  auto options = config.sequence;
  options.seed = config.seed;
  const auto sequence = sensing::generate_sequence(model, options);
  return write_dataset(config.dataset, model, sequence, config.hash(), config.seed);
}

json cmd_train(const ExperimentConfig& config, const std::vector<std::string>& variants) {
  config.validate();
  std::vector<const Variant*> selected;
  for (const auto& name : variants) selected.push_back(&config.variant(name));

  const auto info = read_dataset_info(config.dataset);
  const auto split = split_frames(info.frame_count, config.heldout_fraction);
  std::vector<tracking::TrainingFrame> frames;
  for (int id : split.train) frames.push_back(read_frame(info, id).training());

  json summary = json::object();
  for (const Variant* v : selected) {
    neural::UpdateNetwork network(variant_spec(config, *v), config.train.init_seed);
    tracking::TrainConfig tc;
    tc.epochs = config.train.epochs;
    tc.adamw.lr = config.train.lr;
    tc.adamw.weight_decay = config.train.weight_decay;
    tc.loss_samples = config.train.loss_samples;
    tc.seed = config.seed;
    const auto report = tracking::train(network, frames, info.model, variant_nicp(config, *v), tc);

    const auto path = weights_path(config, v->name);
    fs::create_directories(path.parent_path());
    neural::save_weights(network, path);
    std::string csv = "epoch,loss_m2\n";
    for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
      csv += std::to_string(e) + ',' + format_double(report.epoch_loss[e]) + '\n';
    }
    write_text(config.output / ("loss_" + v->name + ".csv"), csv);
    summary[v->name] = {{"weights", path.string()},
                        {"checksum", hex32(neural::weights_checksum(network.parameters()))},
                        {"epochs", report.epoch_loss.size()},
                        {"final_loss_m2", report.epoch_loss.empty() ? json(nullptr) : json(report.epoch_loss.back())}};
  }
  return summary;
}

json cmd_track(const ExperimentConfig& config, const std::string& variant_name) {
  config.validate();
  const Variant& variant = config.variant(variant_name);
  const auto info = read_dataset_info(config.dataset);
  std::vector<int> ids(static_cast<std::size_t>(info.frame_count));
  for (int i = 0; i < info.frame_count; ++i) ids[static_cast<std::size_t>(i)] = i;
  const auto frames = load_frames(info, ids);
  auto runs = run_nicp(config, info, frames, variant);

  std::vector<geometry::TriMesh> meshes;
  for (auto& r : runs) meshes.push_back(r.mesh);
  if (config.smoothing_window > 1) meshes = tracking::temporal_smooth(meshes, config.smoothing_window);

  const fs::path dir = config.output / "track" / variant.name;
  fs::create_directories(dir);
  json rows = json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    geometry::write_ply_mesh(dir / frame_file(frames[i].id, "ply"), meshes[i]);
    rows.push_back({{"id", frames[i].id},
                    {"mse_mm2", final_mse(config, meshes[i], frames[i].mesh)},
                    {"trace", runs[i].trace.to_json()}});
  }
  const json manifest = {{"variant", variant.name},
                         {"iterations", variant.iterations},
                         {"smoothing_window", config.smoothing_window},
                         {"config_hash", config.hash()},
                         {"seed", config.seed},
                         {"frames", rows}};
  write_text(dir / "track.json", manifest.dump(2) + "\n");
  return {{"variant", variant.name}, {"frames", frames.size()}, {"output", dir.string()}};
}

json cmd_benchmark(const ExperimentConfig& config) {
  config.validate();
  const auto info = read_dataset_info(config.dataset);
  const auto split = split_frames(info.frame_count, config.heldout_fraction);
  const auto frames = load_frames(info, split.heldout);

  std::map<std::string, std::vector<MethodRun>> runs;
  for (const auto& method : config.methods) {
    runs[method] = method == "nicp" ? run_nicp(config, info, frames, config.variant(config.benchmark_variant))
                                    : run_classical(config, info, frames, method);
  }

  const fs::path dir = config.output / "benchmark";
  json methods = json::object();
  std::string summary_csv = "method,frames,mean_initial_mse_mm2,mean_final_mse_mm2,mean_time_s,reached_threshold,"
                            "mean_time_to_threshold_s\n";
  for (const auto& method : config.methods) {
    const auto& rs = runs.at(method);
    fs::create_directories(dir / method);
    json rows = json::array();
    std::vector<double> initial, finals, times, reach;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const auto& r = rs[i];
      r.trace.write_csv(dir / method / frame_file(frames[i].id, "csv"));
      geometry::write_ply_mesh(dir / method / frame_file(frames[i].id, "ply"), r.mesh);
      const double ttt = time_to_threshold(r.trace, config.mse_threshold);
      initial.push_back(r.trace.records.front().mse_mm2);
      finals.push_back(r.final_mse);
      times.push_back(r.trace.records.back().time_s);
      if (ttt >= 0.0) reach.push_back(ttt);
      rows.push_back({{"id", frames[i].id},
                      {"steps", static_cast<int>(r.trace.records.size()) - 1},
                      {"initial_mse_mm2", r.trace.records.front().mse_mm2},
                      {"final_mse_mm2", r.final_mse},
                      {"time_s", r.trace.records.back().time_s},
                      {"time_to_threshold_s", ttt >= 0.0 ? json(ttt) : json(nullptr)}});
    }
    json entry = {{"frames", rows},
                  {"mean_initial_mse_mm2", mean(initial)},
                  {"mean_final_mse_mm2", mean(finals)},
                  {"mean_time_s", mean(times)},
                  {"reached_threshold", reach.size()},
                  {"mean_time_to_threshold_s", number_or_null(mean(reach))}};
    if (method == "nicp") entry["variant"] = config.benchmark_variant;
    methods[method] = entry;
    summary_csv += method + ',' + std::to_string(rs.size()) + ',' + format_double(mean(initial)) + ',' +
                   format_double(mean(finals)) + ',' + format_double(mean(times)) + ',' +
                   std::to_string(reach.size()) + ',' + format_double(mean(reach)) + '\n';
  }

  // Each solver's error at the time N-ICP needed for the same frame.
  json equal_time = json::object();
  if (runs.count("nicp")) {
    const auto& nicp = runs.at("nicp");
    for (const auto& method : config.methods) {
      std::vector<double> values;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        values.push_back(mse_at_time(runs.at(method)[i].trace, nicp[i].trace.records.back().time_s));
      }
      equal_time[method] = mean(values);
    }
  }

  std::vector<int> heldout_ids;
  for (const auto& f : frames) heldout_ids.push_back(f.id);
  const json report = {{"config_hash", config.hash()},
                       {"seed", config.seed},
                       {"environment", environment_fingerprint(config)},
                       {"heldout_frames", heldout_ids},
                       {"mse_samples", config.mse_samples},
                       {"mse_threshold_mm2", config.mse_threshold},
                       {"methods", methods},
                       {"mse_at_nicp_time_mm2", equal_time}};
  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "summary.csv", summary_csv);
  return report;
}

json cmd_ablation(const ExperimentConfig& config) {
  config.validate();
  for (const auto& v : config.variants) {
    if (!fs::exists(weights_path(config, v.name))) {
      throw std::runtime_error("ablation: no trained weights for variant '" + v.name + "'");
    }
  }
  const auto info = read_dataset_info(config.dataset);
  const auto split = split_frames(info.frame_count, config.heldout_fraction);
  const auto frames = load_frames(info, split.heldout);

  std::map<std::string, double> mse;
  json rows = json::array();
  std::string csv = "variant,inputs,iterations,frames,mean_mse_mm2\n";
  for (const auto& v : config.variants) {
    const auto runs = run_nicp(config, info, frames, v);
    std::vector<double> values;
    json per_frame = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i) {
      values.push_back(runs[i].final_mse);
      per_frame.push_back({{"id", frames[i].id}, {"mse_mm2", runs[i].final_mse}});
      const fs::path mesh_dir = config.output / "ablation" / v.name;
      fs::create_directories(mesh_dir);
      geometry::write_ply_mesh(mesh_dir / frame_file(frames[i].id, "ply"), runs[i].mesh);
    }
    mse[v.name] = mean(values);
    rows.push_back({{"variant", v.name},
                    {"inputs", v.inputs()},
                    {"iterations", v.iterations},
                    {"mean_mse_mm2", mse[v.name]},
                    {"frames", per_frame}});
    csv += v.name + ",\"" + v.inputs() + "\"," + std::to_string(v.iterations) + ',' + std::to_string(runs.size()) +
           ',' + format_double(mse[v.name]) + '\n';
  }

  json checks = json::array();
  bool all = true;
  bool evaluated = true;
  try {
    for (const auto& c : ablation_checks(mse)) {
      checks.push_back({{"name", c.name}, {"relation", c.relation}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"passed", c.passed}});
      all = all && c.passed;
    }
  } catch (const std::runtime_error&) {
    evaluated = false;  // custom variant sets need not contain the standard five
  }
  const json report = {{"config_hash", config.hash()},
                       {"seed", config.seed},
                       {"environment", environment_fingerprint(config)},
                       {"tolerance", 0.05},
                       {"rows", rows},
                       {"checks", checks},
                       {"orderings_evaluated", evaluated},
                       {"orderings_hold", evaluated && all}};
  write_text(config.output / "ablation.csv", csv);
  write_text(config.output / "ablation.json", report.dump(2) + "\n");
  return report;
}

}  // namespace nicp::bench
