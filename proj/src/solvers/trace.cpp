#include "nicp/solvers/trace.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nicp/geometry/metrics.hpp"

namespace nicp::solvers {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string SolveTrace::to_csv() const {
  std::ostringstream out;
  out << "step,time_s,loss_m2,mse_mm2,step_norm\n";
  for (const auto& r : records) {
    out << r.step << ',' << format_double(r.time_s) << ',' << format_double(r.loss_m2) << ','
        << format_double(r.mse_mm2) << ',' << format_double(r.step_norm) << '\n';
  }
  return out.str();
}

void SolveTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << to_csv();
}

nlohmann::json SolveTrace::to_json() const {
  nlohmann::json j;
  j["solver"] = solver;
  j["records"] = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json row = {{"step", r.step}, {"time_s", r.time_s}, {"loss_m2", r.loss_m2},
                          {"step_norm", r.step_norm}};
    row["mse_mm2"] = std::isnan(r.mse_mm2) ? nlohmann::json(nullptr) : nlohmann::json(r.mse_mm2);
    j["records"].push_back(std::move(row));
  }
  const auto& v = final_params.vector();
  j["final_params"] = std::vector<double>(v.data(), v.data() + v.size());
  return j;
}

TraceRecorder::TraceRecorder(std::string solver, const deform::PosedModel& posed, TraceOptions options)
    : posed_(posed), options_(std::move(options)), clock_(options_.clock) {
  trace_.solver = std::move(solver);
}

void TraceRecorder::record(const deform::GraphParams& params, double loss, double step_norm) {
  clock_.pause();
  TraceRecord r;
  r.step = static_cast<int>(trace_.records.size());
  r.time_s = clock_.seconds();
  r.loss_m2 = loss;
  r.step_norm = step_norm;
  if (options_.reference) {
    r.mse_mm2 = geometry::two_way_mse(posed_.mesh(params), *options_.reference, options_.mse_samples,
                                      options_.mse_seed);
  }
  trace_.records.push_back(r);
  clock_.resume();
}

SolveTrace TraceRecorder::finish(const deform::GraphParams& final_params) {
  clock_.pause();
  trace_.final_params = final_params;
  return std::move(trace_);
}

}  // namespace nicp::solvers
