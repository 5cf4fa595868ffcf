#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "gflow/mixtures.hpp"
#include "gflow/quadrature.hpp"
#include "gflow/schedule.hpp"

namespace gflow {

struct ScoreQuery {
  SchedulePoint point;
  double x;
  std::optional<ClassLabel> label;  // empty: unconditional
};

/// Posterior class weights and posterior means of X_0 given X_t = x.
struct PosteriorDiagnostics {
  double q_pos;
  double q_neg;
  double mean_uncond;
  double mean_pos;
  double mean_neg;

  double q(ClassLabel z) const { return z == ClassLabel::Positive ? q_pos : q_neg; }
  double mean(ClassLabel z) const { return z == ClassLabel::Positive ? mean_pos : mean_neg; }
};

/// log of int p(alpha) exp(-(x - a alpha)^2 / (2 b^2)) d alpha and the
/// posterior mean of alpha under that weight.
struct ComponentPosterior {
  double log_mass;
  double mean;
};

/// Quadrature over one piecewise-polynomial component. Exponents are shifted
/// by their maximum on the support and the range is cut to the window where
/// the shifted weight exceeds e^{-50}. When the window collapses below
/// floating-point resolution the posterior is collapsed to the nearest
/// support point.
ComponentPosterior component_posterior(const PiecewisePolynomial& density,
                                       const SchedulePoint& point, double x,
                                       const QuadratureOptions& opt = {});

/// Same computation for an arbitrary bounded density restricted to `range`.
ComponentPosterior component_posterior(const std::function<double(double)>& density,
                                       Interval range, const SchedulePoint& point, double x,
                                       const QuadratureOptions& opt = {});

PosteriorDiagnostics posterior_compact(const CompactPairSpec& spec, const SchedulePoint& point,
                                       double x, const QuadratureOptions& opt = {});
PosteriorDiagnostics posterior_gaussian(const GaussianPairSpec& spec, const SchedulePoint& point,
                                        double x);
/// Diagnostics for the class-bearing coordinate.
PosteriorDiagnostics posterior(const MixtureSpec& spec, const SchedulePoint& point, double x);

/// Tweedie: grad log p_t(x) = (a E[X_0 | x] - x) / b^2.
double score_from_mean(const SchedulePoint& point, double x, double posterior_mean);
double score_from_posterior(const PosteriorDiagnostics& post, const SchedulePoint& point, double x,
                            std::optional<ClassLabel> label);

double exact_score_compact(const CompactPairSpec& spec, const ScoreQuery& query);
double exact_score_gaussian(const GaussianPairSpec& spec, const ScoreQuery& query);
double exact_score(const MixtureSpec& spec, const ScoreQuery& query);

/// Score of the noised nuisance coordinate (class-independent).
double nuisance_score(const MixtureSpec& spec, const SchedulePoint& point, double y);

struct MCEstimate {
  double value;
  double std_error;
  std::size_t n;
};

class DegenerateEstimateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ratio estimator E[grad kernel] / E[kernel] over n draws of A_t = a_t X,
/// with X ~ p (or p^{(z)}). Numerator and denominator share draws; the
/// standard error uses the delta method.
MCEstimate mc_score(const MixtureSpec& spec, const ScoreQuery& query, std::size_t n, Rng& rng);
/// Same estimator over caller-supplied clean draws of the first coordinate.
MCEstimate mc_score_from_draws(std::span<const double> draws, const SchedulePoint& point, double x);

struct ScorePair {
  double cond;
  double uncond;
};

/// Source of noised scores for the class-bearing coordinate.
class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual double score(const SchedulePoint& point, double x,
                       std::optional<ClassLabel> label) const = 0;
  /// Conditional (class z) and unconditional scores in one evaluation.
  virtual ScorePair score_pair(const SchedulePoint& point, double x, ClassLabel z) const {
    return {score(point, x, z), score(point, x, std::nullopt)};
  }
  /// Empty when the source cannot provide posterior diagnostics.
  virtual std::optional<PosteriorDiagnostics> posterior(const SchedulePoint&, double) const {
    return std::nullopt;
  }
};

class ExactScoreField final : public ScoreField {
 public:
  explicit ExactScoreField(MixtureSpec spec) : spec_(std::move(spec)) {}
  double score(const SchedulePoint& point, double x, std::optional<ClassLabel> label) const override;
  ScorePair score_pair(const SchedulePoint& point, double x, ClassLabel z) const override;
  std::optional<PosteriorDiagnostics> posterior(const SchedulePoint& point, double x) const override;
  const MixtureSpec& spec() const { return spec_; }

 private:
  MixtureSpec spec_;
};

/// Monte-Carlo scores with a fixed set of clean draws per class, reused for
/// every query, so the estimated field is a smooth deterministic function of
/// (s, x). Unconditional quantities are stratified over the two classes.
class MonteCarloScoreField final : public ScoreField {
 public:
  MonteCarloScoreField(const MixtureSpec& spec, std::size_t n, std::uint64_t seed);
  double score(const SchedulePoint& point, double x, std::optional<ClassLabel> label) const override;
  ScorePair score_pair(const SchedulePoint& point, double x, ClassLabel z) const override;
  std::optional<PosteriorDiagnostics> posterior(const SchedulePoint& point, double x) const override;

 private:
  std::vector<double> draws_pos_;
  std::vector<double> draws_neg_;
};

struct CorruptionSpec {
  /// Tail cutoff. The L2-error analysis needs R >= 2; the field itself accepts any R > 0.
  double R;
  std::shared_ptr<const ScoreField> base;
};

/// Returns -x for x >= R (every label and the unconditional score) and the
/// base field otherwise.
double corrupted_score(const CorruptionSpec& corruption, const ScoreQuery& query);

class CorruptedScoreField final : public ScoreField {
 public:
  explicit CorruptedScoreField(CorruptionSpec corruption);
  double score(const SchedulePoint& point, double x, std::optional<ClassLabel> label) const override;
  ScorePair score_pair(const SchedulePoint& point, double x, ClassLabel z) const override;
  std::optional<PosteriorDiagnostics> posterior(const SchedulePoint& point, double x) const override;
  double cutoff() const { return corruption_.R; }

 private:
  CorruptionSpec corruption_;
};

struct CorruptionError {
  double error_pos;     // || grad log p_t(.|z=1) - s_t^{(1)} ||^2 in L2(p_t(.|z=1))
  double error_uncond;  // || grad log p_t - s_t ||^2 in L2(p_t)
  double bound;         // C R exp(-R^2/2) / b_t^4 with C = 10
};

inline constexpr double kCorruptionBoundConstant = 10.0;

/// Squared L2 score error of the corrupted field against the true noised
/// density of a compact pair, integrated over [R, R + 40 b_t].
/// The corruption's base field must be an exact field over a compact pair.
CorruptionError corruption_l2_error(const CorruptionSpec& corruption, const SchedulePoint& point,
                                    std::size_t quad_budget);
CorruptionError corruption_l2_error(const CompactPairSpec& spec, double R,
                                    const SchedulePoint& point, std::size_t quad_budget);

/// Noised component density p_t(x | z) for a compact pair.
double noised_component_density(const CompactPairSpec& spec, ClassLabel z,
                                const SchedulePoint& point, double x);

}  // namespace gflow
