#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "gflow/flow.hpp"
#include "gflow/mixtures.hpp"

namespace gflow {

inline constexpr std::array<double, 7> kSummaryLevels = {0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99};

struct Summary {
  std::size_t n;
  double mean;
  double std;  // sample standard deviation (n - 1)
  std::array<double, 7> quantiles;  // at kSummaryLevels
  std::optional<double> fraction_in;

  double quantile(double level) const;
};

/// Linear-interpolation (type 7) quantile of sorted data.
double quantile_sorted(std::span<const double> sorted, double level);
Summary summarize(std::span<const double> values, std::optional<Interval> interval = std::nullopt);
/// Summary of the first coordinate of the successful trajectories.
Summary summarize(const SampleBatch& batch, std::optional<Interval> interval = std::nullopt);

enum class Comparison { Less, LessEqual, Greater, GreaterEqual };
std::string to_string(Comparison op);

struct Check {
  std::string name;
  double observed;
  Comparison op;
  double threshold;
  bool pass;

  static Check make(std::string name, double observed, Comparison op, double threshold);
};

struct HypothesisCheck {
  std::string name;
  double lhs;
  double rhs;
  bool holds;
};

struct VerificationReport {
  std::string claim;
  std::vector<HypothesisCheck> hypotheses;
  std::vector<Check> checks;
  /// "full" when every hypothesis holds, "trend-only" otherwise.
  std::string mode = "full";
  nlohmann::json details = nlohmann::json::object();

  bool pass() const;
  std::string verdict() const { return pass() ? "pass" : "fail"; }
  nlohmann::json to_json() const;
};

struct SweepBatch {
  double w;
  std::vector<double> finals;  // first coordinate
};

/// Interval and probability of the compact-support edge theorem, plus its
/// hypotheses. Verdict rests on the interval test when the hypotheses hold and
/// on the 5th-percentile trend across the sweep otherwise.
VerificationReport verify_edge_concentration(std::vector<SweepBatch> sweep,
                                             const CompactPairSpec& spec);

/// Sign of x(1) for the reduced Gaussian flow at the two boundary
/// initial conditions -2w + 26 ln w + 0.01 and -2w - 1.01.
VerificationReport verify_gaussian_positive(double w, const IntegratorConfig& cfg);
/// x(1) > sqrt(w+1)/4 from x0 = -sqrt(w+1)/2 and from `extra` random points above it.
VerificationReport verify_gaussian_sqrtw(double w, const IntegratorConfig& cfg,
                                         std::uint64_t seed = 0, std::size_t extra = 10);
/// Fractions of x(1) >= 0 and x(1) >= sqrt(w+1)/4 over N(0,1) initializations,
/// against the normal mass of the deterministic regions less three binomial
/// standard errors.
VerificationReport verify_gaussian_theorem(double w, std::size_t n, std::uint64_t seed,
                                           const IntegratorConfig& cfg, int workers = 0);

struct OvershootProfile {
  double max_state;
  double time_of_max;
  bool entered_tail;
  double pullback_depth;
  bool monotone;
  /// Largest drop below a running maximum anywhere along the path.
  double max_drawdown;
};

inline constexpr double kMonotoneTolerance = 1e-6;

OvershootProfile overshoot_profile(std::span<const double> times, std::span<const double> values,
                                   double right_edge, double tolerance = kMonotoneTolerance);
/// Profile of coordinate 0, using the integrator's running maximum.
OvershootProfile overshoot_profile(const Trajectory& traj, const MixtureSpec& spec,
                                   double tolerance = kMonotoneTolerance);

struct FreezeOptions {
  double w = 100.0;
  /// Defaults to ln(w)/32.
  std::optional<double> R;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  int workers = 0;
};

/// R at `factor` times the median running maximum of an uncorrupted batch.
double freeze_cutoff_from_overshoot(const MixtureSpec& spec, double w, std::size_t n,
                                    std::uint64_t seed, const IntegratorConfig& cfg,
                                    double factor = 0.9, int workers = 0);

VerificationReport verify_freeze(const MixtureSpec& spec, const IntegratorConfig& cfg,
                                 const FreezeOptions& opt);

/// Squared L2 error of the corrupted scores over an (R, t) grid, t being
/// forward noise time (schedule point at reverse time T - t). Checks decay in
/// R at each t, decay in t at each R, and the bound C R e^{-R^2/2} / b^4.
VerificationReport verify_corruption_decay(const CompactPairSpec& spec, std::vector<double> Rs,
                                           std::vector<double> ts, double T = kDefaultHorizon);

/// Mean over samples and coordinates of the distance to the box (0 inside).
double support_error(const std::vector<std::vector<double>>& samples,
                     const std::vector<Interval>& box);

enum class SelectionRule { Monotonicity, SupportError };

struct SweepEntry {
  double w;
  std::vector<std::vector<double>> finals;
  std::vector<OvershootProfile> profiles;
};

struct GuidanceRationale {
  double w;
  double pullback_median;
  double support_error;
  bool monotone_ok;
  bool support_ok;
  std::string note;
};

struct GuidanceSelection {
  SelectionRule rule;
  std::optional<double> recommended_w;
  std::optional<double> monotone_choice;
  std::optional<double> support_choice;
  std::vector<GuidanceRationale> rationale;
};

/// Monotonicity rule: largest w whose median pullback depth is within
/// pullback_tol. Support-error rule: largest w with zero support error.
GuidanceSelection select_guidance(std::vector<SweepEntry> sweep, const std::vector<Interval>& box,
                                  SelectionRule rule, double pullback_tol);
/// 5% of the width of the first box coordinate.
double default_pullback_tolerance(const std::vector<Interval>& box);

struct TiltedReference {
  std::vector<double> grid;
  std::vector<double> density;  // normalized
  std::vector<double> cdf;
  std::vector<double> samples;

  double cdf_at(double x) const;
};

/// p(x) p(z | x)^{1+w}, tabulated on a uniform grid and normalized by the
/// trapezoid rule; samples by inverse CDF.
TiltedReference tilted_reference(const MixtureSpec& spec, double w, ClassLabel target,
                                 std::size_t grid_size, std::size_t n_samples = 0,
                                 std::uint64_t seed = 0);

/// Kolmogorov-Smirnov distance of the sample to the reference CDF.
double ks_distance(std::span<const double> sample, const TiltedReference& reference);
double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf);
double ks_two_sample(std::span<const double> a, std::span<const double> b);

struct Divergence {
  double ks_distance;
};
Divergence divergence_from_tilted(std::span<const double> finals, const TiltedReference& tilted);

double normal_cdf(double x);

}  // namespace gflow
