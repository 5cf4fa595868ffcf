#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gflow/schedule.hpp"

namespace gflow {

enum class IntegratorMethod { DormandPrince, Rk4Fixed };

struct IntegratorConfig {
  IntegratorMethod method = IntegratorMethod::DormandPrince;
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  /// Step budget for the adaptive method; step count for fixed-step RK4.
  std::size_t max_steps = 200'000;
  /// Flows with a terminal singularity stop at s = 1 - t_end_margin.
  double t_end_margin = 1e-4;
  std::size_t record_every = 1;
  double horizon = kDefaultHorizon;
  /// Rerun at half tolerance and compare endpoints.
  bool validate_endpoint = false;

  /// Fixed-step RK4 with 1000 steps and T = 10.
  static IntegratorConfig fixed_step_preset();
  void validate() const;
};

/// dx/ds for a state of any dimension.
using Drift = std::function<void(double s, std::span<const double> x, std::span<double> dxds)>;
using ScalarDrift = std::function<double(double s, double x)>;

/// Crossing of `level` by one state coordinate, located by linear
/// interpolation between accepted steps. With `clamp_upward`, an upward
/// crossing truncates the step at the crossing and sets the coordinate to the
/// level exactly before integration resumes.
struct LevelEvent {
  std::size_t coordinate = 0;
  double level = 0.0;
  bool clamp_upward = false;
  std::string name;
};

struct EventRecord {
  std::string name;
  double s;
  int direction;  // +1 upward, -1 downward
};

struct DriftDiagnostics {
  double q_neg;
  double mean_pos;
  double mean_neg;
  double term1;
  double term2;
};

enum class TrajectoryStatus { Ok, StepLimit, NonFinite };
std::string to_string(TrajectoryStatus status);

struct Trajectory {
  std::size_t dim = 1;
  std::vector<double> times;   // s-values, strictly increasing
  std::vector<double> states;  // times.size() x dim, row-major
  std::vector<std::optional<DriftDiagnostics>> diagnostics;  // empty or one per record
  std::vector<EventRecord> events;
  TrajectoryStatus status = TrajectoryStatus::Ok;
  std::string message;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
  /// Running maximum of coordinate 0 over every accepted step, recorded or not.
  double max_first = -INFINITY;
  double max_first_s = 0.0;
  std::optional<double> validation_gap;
  bool endpoint_validated = false;

  std::size_t size() const { return times.size(); }
  double state(std::size_t i, std::size_t c = 0) const { return states[i * dim + c]; }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(states).subspan(i * dim, dim);
  }
  std::span<const double> final_point() const { return point(size() - 1); }
  double final_state(std::size_t c = 0) const { return state(size() - 1, c); }
  bool ok() const { return status == TrajectoryStatus::Ok; }
};

struct IntegrateOptions {
  std::vector<LevelEvent> events;
  /// Called at every recorded point when set.
  std::function<std::optional<DriftDiagnostics>(double s, std::span<const double> x)> diagnostics;
  /// Keep only the first and last points (the running maximum is still tracked).
  bool endpoints_only = false;
};

/// Dormand-Prince 5(4) with PI step control, or classical RK4 on a uniform
/// grid, over s in [s_start, s_end].
Trajectory integrate(const Drift& drift, std::span<const double> x0, double s_start, double s_end,
                     const IntegratorConfig& cfg, const IntegrateOptions& opt = {});
Trajectory integrate(const ScalarDrift& drift, double x0, double s_start, double s_end,
                     const IntegratorConfig& cfg, const IntegrateOptions& opt = {});

}  // namespace gflow
