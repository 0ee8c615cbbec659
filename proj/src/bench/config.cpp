#include "nicp/bench/config.hpp"

#include <cstdio>
#include <fstream>

#include <zlib.h>

namespace nicp::bench {

using nlohmann::json;

std::string Variant::inputs() const {
  std::string s = "P";
  if (residual) s += ",r";
  if (gradient) s += ",g";
  return s;
}

std::vector<Variant> standard_variants() {
  return {{"P_N1", false, false, 1},
          {"P_r_N3", true, false, 3},
          {"P_g_N3", false, true, 3},
          {"P_r_g_N1", true, true, 1},
          {"full", true, true, 3}};
}

std::string clock_name(ClockKind kind) { return kind == ClockKind::Wall ? "wall" : "virtual"; }

ClockKind parse_clock(const std::string& name) {
  if (name == "wall") return ClockKind::Wall;
  if (name == "virtual") return ClockKind::Virtual;
  throw ValidationError("unknown clock '" + name + "' (expected wall or virtual)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("config: " + msg); };
  if (threads < 1) fail("threads must be >= 1");
  if (node_count < 2) fail("node_count must be >= 2");
  if (graph.influence_count < 1 || graph.edge_neighbors < 1) fail("graph influence/edge counts must be >= 1");
  if (garment.rings < 2 || garment.segments < 3) fail("garment needs >= 2 rings and >= 3 segments");
  if (node_count > garment.rings * garment.segments) fail("node_count exceeds the template vertex count");
  if (sequence.frames < 1) fail("frames must be >= 1");
  if (sequence.dense_samples < 1) fail("dense_samples must be >= 1");
  try {
    sequence.rig.validate();
    sequence.trajectory.validate();
    nicp.validate();
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
  if (train.epochs < 0) fail("epochs must be >= 0");
  if (!(train.lr > 0.0f) || !(train.weight_decay >= 0.0f) || train.loss_samples < 1) fail("invalid training settings");
  if (solvers.lm_iterations < 0 || solvers.lbfgs_iterations < 0 || solvers.nlcg_iterations < 0 ||
      solvers.lbfgs_memory < 1 || !(solvers.lm_damping > 0.0)) {
    fail("invalid solver settings");
  }
  for (const auto& m : methods) {
    if (m != "nicp" && m != "lm" && m != "lbfgs" && m != "nlcg") fail("unknown method '" + m + "'");
  }
  if (variants.empty()) fail("no variants");
  for (const auto& v : variants) {
    if (v.name.empty() || v.iterations < 1) fail("invalid variant");
  }
  for (std::size_t i = 0; i < variants.size(); ++i) {
    for (std::size_t j = i + 1; j < variants.size(); ++j) {
      if (variants[i].name == variants[j].name) fail("duplicate variant '" + variants[i].name + "'");
    }
  }
  if (!(heldout_fraction > 0.0 && heldout_fraction < 1.0)) fail("heldout_fraction must be in (0, 1)");
  const int heldout = static_cast<int>(sequence.frames * heldout_fraction + 0.5);
  if (heldout < 1 || heldout >= sequence.frames) fail("the split leaves no training or held-out frames");
  if (mse_samples < 1) fail("mse_samples must be >= 1");
  if (smoothing_window < 1 || smoothing_window % 2 == 0) fail("smoothing_window must be odd and positive");
  variant(benchmark_variant);
}

const Variant& ExperimentConfig::variant(const std::string& name) const {
  for (const auto& v : variants) {
    if (v.name == name) return v;
  }
  throw ValidationError("unknown variant '" + name + "'");
}

json ExperimentConfig::to_json() const {
  const auto& rig = sequence.rig;
  const auto& tr = sequence.trajectory;
  json variants_json = json::array();
  for (const auto& v : variants) {
    variants_json.push_back({{"name", v.name}, {"residual", v.residual}, {"gradient", v.gradient},
                             {"iterations", v.iterations}});
  }
  return {
      {"dataset", dataset.string()},
      {"output", output.string()},
      {"seed", seed},
      {"threads", threads},
      {"clock", clock_name(clock)},
      {"model", {{"node_count", node_count},
                 {"influence_count", graph.influence_count},
                 {"edge_neighbors", graph.edge_neighbors},
                 {"graph_seed", graph.seed}}},
      {"garment", {{"rings", garment.rings},
                   {"segments", garment.segments},
                   {"waist_y", garment.waist_y},
                   {"hem_y", garment.hem_y},
                   {"waist_radius", garment.waist_radius},
                   {"hem_radius", garment.hem_radius},
                   {"pleat_depth", garment.pleat_depth},
                   {"pleats", garment.pleats}}},
      {"sequence", {{"frames", sequence.frames}, {"dense_samples", sequence.dense_samples}}},
      {"rig", {{"cameras", rig.cameras},
               {"distance", rig.distance},
               {"elevation", rig.elevation},
               {"target", {rig.target.x(), rig.target.y(), rig.target.z()}},
               {"start_angle", rig.start_angle},
               {"focal", rig.focal},
               {"width", rig.width},
               {"height", rig.height},
               {"stride", rig.stride},
               {"noise_sigma", rig.noise_sigma},
               {"dropout", rig.dropout}}},
      {"trajectory", {{"keyframe_interval", tr.keyframe_interval},
                      {"anchors", tr.anchors},
                      {"kernel_width", tr.kernel_width},
                      {"rotation_amplitude", tr.rotation_amplitude},
                      {"translation_amplitude", tr.translation_amplitude},
                      {"max_rotation", tr.max_rotation},
                      {"max_translation", tr.max_translation},
                      {"pose_amplitude", tr.pose_amplitude}}},
      {"nicp", {{"iterations", nicp.iterations},
                {"subsample", nicp.subsample},
                {"reg_weight", nicp.reg_weight},
                {"correspondence", nicp.mode == solvers::CorrespondenceMode::Euclidean ? "euclidean" : "projective"}}},
      {"train", {{"epochs", train.epochs},
                 {"lr", train.lr},
                 {"weight_decay", train.weight_decay},
                 {"loss_samples", train.loss_samples},
                 {"residual_scale", train.residual_scale},
                 {"gradient_scale", train.gradient_scale},
                 {"init_seed", train.init_seed}}},
      {"solvers", {{"lm_iterations", solvers.lm_iterations},
                   {"lm_damping", solvers.lm_damping},
                   {"lbfgs_iterations", solvers.lbfgs_iterations},
                   {"lbfgs_memory", solvers.lbfgs_memory},
                   {"nlcg_iterations", solvers.nlcg_iterations}}},
      {"methods", methods},
      {"benchmark_variant", benchmark_variant},
      {"variants", variants_json},
      {"heldout_fraction", heldout_fraction},
      {"mse_samples", mse_samples},
      {"mse_threshold", mse_threshold},
      {"smoothing_window", smoothing_window},
  };
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j, const std::filesystem::path& base) {
  ExperimentConfig c;
  try {
    auto path = [&](const char* key, std::filesystem::path& out) {
      if (!j.contains(key)) return;
      std::filesystem::path p = j.at(key).get<std::string>();
      out = p.is_relative() && !base.empty() ? base / p : p;
    };
    path("dataset", c.dataset);
    path("output", c.output);
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    if (j.contains("clock")) c.clock = parse_clock(j.at("clock").get<std::string>());
    if (j.contains("model")) {
      const auto& m = j.at("model");
      read(m, "node_count", c.node_count);
      read(m, "influence_count", c.graph.influence_count);
      read(m, "edge_neighbors", c.graph.edge_neighbors);
      read(m, "graph_seed", c.graph.seed);
    }
    if (j.contains("garment")) {
      const auto& g = j.at("garment");
      read(g, "rings", c.garment.rings);
      read(g, "segments", c.garment.segments);
      read(g, "waist_y", c.garment.waist_y);
      read(g, "hem_y", c.garment.hem_y);
      read(g, "waist_radius", c.garment.waist_radius);
      read(g, "hem_radius", c.garment.hem_radius);
      read(g, "pleat_depth", c.garment.pleat_depth);
      read(g, "pleats", c.garment.pleats);
    }
    if (j.contains("sequence")) {
      read(j.at("sequence"), "frames", c.sequence.frames);
      read(j.at("sequence"), "dense_samples", c.sequence.dense_samples);
    }
    if (j.contains("rig")) {
      const auto& r = j.at("rig");
      auto& rig = c.sequence.rig;
      read(r, "cameras", rig.cameras);
      read(r, "distance", rig.distance);
      read(r, "elevation", rig.elevation);
      if (r.contains("target")) {
        const auto t = r.at("target").get<std::vector<double>>();
        if (t.size() != 3) throw ValidationError("config: rig.target needs 3 entries");
        rig.target = geometry::Vec3(t[0], t[1], t[2]);
      }
      read(r, "start_angle", rig.start_angle);
      read(r, "focal", rig.focal);
      read(r, "width", rig.width);
      read(r, "height", rig.height);
      read(r, "stride", rig.stride);
      read(r, "noise_sigma", rig.noise_sigma);
      read(r, "dropout", rig.dropout);
    }
    if (j.contains("trajectory")) {
      const auto& t = j.at("trajectory");
      auto& tr = c.sequence.trajectory;
      read(t, "keyframe_interval", tr.keyframe_interval);
      read(t, "anchors", tr.anchors);
      read(t, "kernel_width", tr.kernel_width);
      read(t, "rotation_amplitude", tr.rotation_amplitude);
      read(t, "translation_amplitude", tr.translation_amplitude);
      read(t, "max_rotation", tr.max_rotation);
      read(t, "max_translation", tr.max_translation);
      read(t, "pose_amplitude", tr.pose_amplitude);
    }
    if (j.contains("nicp")) {
      const auto& n = j.at("nicp");
      read(n, "iterations", c.nicp.iterations);
      read(n, "subsample", c.nicp.subsample);
      read(n, "reg_weight", c.nicp.reg_weight);
      if (n.contains("correspondence")) {
        const auto mode = n.at("correspondence").get<std::string>();
        if (mode == "euclidean") {
          c.nicp.mode = solvers::CorrespondenceMode::Euclidean;
        } else if (mode == "projective") {
          c.nicp.mode = solvers::CorrespondenceMode::Projective;
        } else {
          throw ValidationError("config: unknown correspondence mode '" + mode + "'");
        }
      }
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      read(t, "epochs", c.train.epochs);
      read(t, "lr", c.train.lr);
      read(t, "weight_decay", c.train.weight_decay);
      read(t, "loss_samples", c.train.loss_samples);
      read(t, "residual_scale", c.train.residual_scale);
      read(t, "gradient_scale", c.train.gradient_scale);
      read(t, "init_seed", c.train.init_seed);
    }
    if (j.contains("solvers")) {
      const auto& s = j.at("solvers");
      read(s, "lm_iterations", c.solvers.lm_iterations);
      read(s, "lm_damping", c.solvers.lm_damping);
      read(s, "lbfgs_iterations", c.solvers.lbfgs_iterations);
      read(s, "lbfgs_memory", c.solvers.lbfgs_memory);
      read(s, "nlcg_iterations", c.solvers.nlcg_iterations);
    }
    read(j, "methods", c.methods);
    read(j, "benchmark_variant", c.benchmark_variant);
    if (j.contains("variants")) {
      c.variants.clear();
      for (const auto& v : j.at("variants")) {
        c.variants.push_back({v.at("name").get<std::string>(), v.value("residual", true), v.value("gradient", true),
                              v.value("iterations", 3)});
      }
    }
    read(j, "heldout_fraction", c.heldout_fraction);
    read(j, "mse_samples", c.mse_samples);
    read(j, "mse_threshold", c.mse_threshold);
    read(j, "smoothing_window", c.smoothing_window);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.sequence.seed = c.seed;
  c.nicp.seed = c.seed;
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

std::string ExperimentConfig::hash() const {
  json j = to_json();
  // Paths and threads do not change any result.
  j.erase("dataset");
  j.erase("output");
  j.erase("threads");
  const std::string text = j.dump();
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

}  // namespace nicp::bench
