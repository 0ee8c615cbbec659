#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nicp/common/work_meter.hpp"
#include "nicp/deform/model.hpp"

namespace nicp::solvers {

struct TraceRecord {
  int step = 0;
  double time_s = 0.0;     // update-path time since the solve started
  double loss_m2 = 0.0;    // objective at this step
  double mse_mm2 = std::numeric_limits<double>::quiet_NaN();  // vs. reference, if any
  double step_norm = 0.0;  // ||delta theta|| of the step that led here
};

struct SolveTrace {
  std::string solver;
  std::vector<TraceRecord> records;
  deform::GraphParams final_params;

  // step,time_s,loss_m2,mse_mm2,step_norm
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
  nlohmann::json to_json() const;
};

// How solvers time and score their steps. The surface error is evaluated
// with the clock paused, so it never counts towards time_s.
struct TraceOptions {
  std::shared_ptr<const deform::TriMesh> reference;  // ground-truth surface for mse_mm2
  int mse_samples = 20000;
  std::uint64_t mse_seed = 0;
  ClockKind clock = ClockKind::Wall;
};

class TraceRecorder {
 public:
  TraceRecorder(std::string solver, const deform::PosedModel& posed, TraceOptions options);

  void start() { clock_.start(); }
  // Appends a record for `params`; pauses the clock while scoring.
  void record(const deform::GraphParams& params, double loss, double step_norm);
  SolveTrace finish(const deform::GraphParams& final_params);

  double elapsed() const { return clock_.seconds(); }
  // Bracket bookkeeping that must not count as update time.
  void pause() { clock_.pause(); }
  void resume() { clock_.resume(); }

 private:
  SolveTrace trace_;
  const deform::PosedModel& posed_;
  TraceOptions options_;
  StepClock clock_;
};

std::string format_double(double v);

}  // namespace nicp::solvers
