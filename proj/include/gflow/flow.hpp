#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gflow/integrator.hpp"
#include "gflow/mixtures.hpp"
#include "gflow/schedule.hpp"
#include "gflow/scores.hpp"

namespace gflow {

enum class ScoreSourceKind { Exact, MonteCarlo, Corrupted };

struct ScoreSourceConfig {
  ScoreSourceKind kind = ScoreSourceKind::Exact;
  std::size_t mc_samples = 10'000;
  std::uint64_t mc_seed = 0;
  /// Cutoff of the corrupted source (its base is the exact field).
  double corruption_R = 2.0;
};

std::string to_string(ScoreSourceKind kind);
std::shared_ptr<const ScoreField> make_score_field(const MixtureSpec& spec,
                                                   const ScoreSourceConfig& source);

struct GuidanceConfig {
  double w = 0.0;
  ClassLabel target = ClassLabel::Positive;
  ScoreSourceConfig source;

  /// Throws std::invalid_argument for w < -1.
  void validate() const;
};

/// dx/dt = x + (w+1) s(x | z) - w s(x), reverse time t.
double guided_drift(const GuidanceConfig& guidance, const ScoreField& field,
                    const SchedulePoint& point, double x);

/// The same drift split into the attraction and guidance terms.
struct DriftTerms {
  double term1;
  double term2;
  double total() const { return term1 + term2; }
};

/// t-form: term1 = (a m_z - a^2 x) / b^2, term2 = (w / b^2) q_{-z} a (m_z - m_{-z}).
DriftTerms guided_drift_terms_t(double w, ClassLabel target, const PosteriorDiagnostics& post,
                                const SchedulePoint& point, double x);
/// s-form (the t-form divided by s = a): term1 = (m_z - s x) / b^2,
/// term2 = (w / b^2) q_{-z} (m_z - m_{-z}).
DriftTerms guided_drift_terms_s(double w, ClassLabel target, const PosteriorDiagnostics& post,
                                const SchedulePoint& point, double x);

/// dx/ds = (w+1) - w tanh(s x), s in [0, 1].
double gaussian_reduced_drift(double w, double s, double x);

enum class FlowForm { S, T };

/// Guided flow for the whole state: the first coordinate follows the guided
/// drift, nuisance coordinates follow the unguided probability-flow drift.
class GuidedFlow {
 public:
  GuidedFlow(MixtureSpec spec, GuidanceConfig guidance, std::shared_ptr<const ScoreField> field);
  /// Builds the score field from guidance.source.
  GuidedFlow(MixtureSpec spec, GuidanceConfig guidance);

  /// dx/ds at the given s.
  void drift_s(double s, std::span<const double> x, std::span<double> dxds) const;
  /// dx/dt at reverse time t of a horizon-T schedule.
  void drift_t(double t, double T, std::span<const double> x, std::span<double> dxdt) const;
  std::optional<DriftDiagnostics> diagnostics(double s, std::span<const double> x) const;

  static double s_start(const IntegratorConfig& cfg);
  static double s_end(const IntegratorConfig& cfg);

  /// Integrates from x0 at s = e^{-T}, T = cfg.horizon, to s = 1 - cfg.t_end_margin.
  /// Times in the result are always s-values.
  Trajectory integrate(std::span<const double> x0, const IntegratorConfig& cfg,
                       FlowForm form = FlowForm::S, bool with_diagnostics = false,
                       bool endpoints_only = false) const;

  const MixtureSpec& spec() const { return spec_; }
  const GuidanceConfig& guidance() const { return guidance_; }
  const ScoreField& field() const { return *field_; }
  const std::shared_ptr<const ScoreField>& field_ptr() const { return field_; }

 private:
  double first_drift_s(const SchedulePoint& point, double x) const;

  MixtureSpec spec_;
  GuidanceConfig guidance_;
  std::shared_ptr<const ScoreField> field_;
  std::vector<LevelEvent> events_;
};

/// Reduced Gaussian flow from x0 at s = 0 to s = 1.
Trajectory integrate_reduced_gaussian(double w, double x0, const IntegratorConfig& cfg,
                                      bool endpoints_only = false);

struct BatchOptions {
  bool retain_trajectories = false;
  bool diagnostics = false;
  /// 0 leaves the OpenMP default.
  int workers = 0;
  FlowForm form = FlowForm::S;
};

struct TrajectoryOutcome {
  std::size_t seed_index;
  std::vector<double> initial;
  std::vector<double> final_state;
  TrajectoryStatus status;
  std::string message;
  double max_first;
};

struct BatchMeta {
  double w;
  ClassLabel target;
  std::uint64_t seed;
  std::size_t requested;
  IntegratorConfig integrator;
  ScoreSourceConfig source;
};

struct SampleBatch {
  std::size_t dim = 1;
  std::vector<TrajectoryOutcome> outcomes;  // one per requested trajectory, by seed index
  std::vector<Trajectory> trajectories;     // filled when retained
  BatchMeta meta;

  /// Final states of successful trajectories, by seed index.
  std::vector<std::vector<double>> finals() const;
  /// Final first coordinates of successful trajectories.
  std::vector<double> final_first() const;
  std::size_t failures() const;
  double failure_fraction() const;
};

/// Initial condition for trajectory i: N(0, I) from a generator seeded with (seed, i).
std::vector<double> initial_state(std::uint64_t seed, std::size_t index, std::size_t dim);

/// Trajectories run in parallel with OpenMP; each one depends only on its own
/// seed index, so the result matches sample_batch_serial exactly.
SampleBatch sample_batch(const GuidedFlow& flow, const IntegratorConfig& cfg, std::size_t n,
                         std::uint64_t seed, const BatchOptions& opt = {});
SampleBatch sample_batch_serial(const GuidedFlow& flow, const IntegratorConfig& cfg,
                                std::size_t n, std::uint64_t seed, const BatchOptions& opt = {});

/// Reduced Gaussian flow batch with x0 ~ N(0, 1).
SampleBatch sample_reduced_gaussian(double w, const IntegratorConfig& cfg, std::size_t n,
                                    std::uint64_t seed, const BatchOptions& opt = {});

}  // namespace gflow
