#pragma once

#include <chrono>
#include <cstdint>

namespace nicp {

// Deterministic cost accounting. Hot paths report the work they perform in
// estimated nanoseconds (operation count times a fixed per-operation cost
// calibrated on a reference CPU). A virtual clock built on these counts
// yields timing columns that are reproducible bit for bit.
namespace work {

struct Cost {
  // Per-operation costs in nanoseconds.
  static constexpr double kBvhNodeVisit = 10.0;
  static constexpr double kTriangleTest = 20.0;
  static constexpr double kBvhBuildEntry = 48.0;
  static constexpr double kRayTriangle = 17.0;
  static constexpr double kVertexInfluence = 7.0;
  static constexpr double kJacobianBlock = 42.0;
  static constexpr double kFloatMac = 0.05;
  static constexpr double kDoubleFlop = 0.42;
  static constexpr double kVectorEntry = 1.7;
};

inline thread_local double g_units = 0.0;

inline void add(double nanoseconds) { g_units += nanoseconds; }
inline double units() { return g_units; }

}  // namespace work

enum class ClockKind { Wall, Virtual };

// Pausable stopwatch over either wall time or the virtual work counter.
class StepClock {
 public:
  explicit StepClock(ClockKind kind = ClockKind::Wall) : kind_(kind) {}

  void start() {
    elapsed_ = 0.0;
    running_ = true;
    mark_ = now();
  }
  void pause() {
    if (running_) {
      elapsed_ += now() - mark_;
      running_ = false;
    }
  }
  void resume() {
    if (!running_) {
      mark_ = now();
      running_ = true;
    }
  }
  double seconds() const { return running_ ? elapsed_ + (now() - mark_) : elapsed_; }
  ClockKind kind() const { return kind_; }

 private:
  double now() const {
    if (kind_ == ClockKind::Virtual) return work::units() * 1e-9;
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
  }

  ClockKind kind_;
  bool running_ = false;
  double mark_ = 0.0;
  double elapsed_ = 0.0;
};

}  // namespace nicp
