#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace gflow {

using Rng = std::mt19937_64;

/// Class label z in {+1, -1}.
enum class ClassLabel : int { Negative = -1, Positive = 1 };

constexpr int sign(ClassLabel z) { return static_cast<int>(z); }
constexpr ClassLabel opposite(ClassLabel z) {
  return z == ClassLabel::Positive ? ClassLabel::Negative : ClassLabel::Positive;
}
ClassLabel label_from_int(int z);

/// Closed interval [lo, hi]; either end may be infinite.
struct Interval {
  double lo;
  double hi;

  bool contains(double x) const { return lo <= x && x <= hi; }
  double width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Density given as a table of polynomial pieces. Piece i covers
/// [breakpoints[i], breakpoints[i+1]] and evaluates
/// sum_k coefficients[i][k] * (x - breakpoints[i])^k. Zero outside the table.
class PiecewisePolynomial {
 public:
  PiecewisePolynomial() = default;
  PiecewisePolynomial(std::vector<double> breakpoints,
                      std::vector<std::vector<double>> coefficients);

  static PiecewisePolynomial uniform(double lo, double hi);

  double operator()(double x) const;
  Interval domain() const { return {breakpoints_.front(), breakpoints_.back()}; }
  std::size_t piece_count() const { return coefficients_.size(); }
  Interval piece(std::size_t i) const { return {breakpoints_[i], breakpoints_[i + 1]}; }
  /// Evaluates piece i at x without the support test.
  double eval_piece(std::size_t i, double x) const;

  double integral() const;
  double cdf(double x) const;
  /// Exact inverse of the normalized CDF; the result always lies in domain().
  double inverse_cdf(double u) const;

  /// x -> p(-x), re-expanded on the mirrored breakpoints.
  PiecewisePolynomial mirrored() const;

  /// Smallest and largest value on a dense per-piece grid (endpoints included).
  std::pair<double, double> value_range(std::size_t nodes_per_piece = 65) const;

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<std::vector<double>>& coefficients() const { return coefficients_; }

  bool operator==(const PiecewisePolynomial&) const = default;

 private:
  double piece_mass(std::size_t i, double u) const;

  std::vector<double> breakpoints_;
  std::vector<std::vector<double>> coefficients_;
  std::vector<double> cumulative_;  // mass before piece i
};

/// Two compactly supported components on [alpha1, alpha2] and [-alpha2, -alpha1].
struct CompactPairSpec {
  double alpha1 = 1.0;
  double alpha2 = 2.0;
  double beta = 1.0;
  PiecewisePolynomial density_pos;
  PiecewisePolynomial density_neg;

  /// Validates every invariant and throws std::invalid_argument naming the
  /// violated one.
  static CompactPairSpec create(double alpha1, double alpha2, double beta,
                                PiecewisePolynomial density_pos,
                                PiecewisePolynomial density_neg);
  static CompactPairSpec uniform_pair(double alpha1, double alpha2, double beta = 1.0);

  const PiecewisePolynomial& density(ClassLabel z) const {
    return z == ClassLabel::Positive ? density_pos : density_neg;
  }
  bool operator==(const CompactPairSpec&) const = default;
};

struct GaussianPairSpec {
  double mu = 1.0;
  double sigma0 = 1.0;

  static GaussianPairSpec create(double mu, double sigma0);
  bool operator==(const GaussianPairSpec&) const = default;
};

/// The two-component mixture plus `extra_dims` class-independent nuisance
/// coordinates. Nuisance coordinates are Uniform[-1/2, 1/2] for compact pairs
/// and N(0, 1) for Gaussian pairs.
struct MixtureSpec {
  std::variant<CompactPairSpec, GaussianPairSpec> kind;
  int extra_dims = 0;

  static MixtureSpec create(std::variant<CompactPairSpec, GaussianPairSpec> kind,
                            int extra_dims = 0);

  bool is_compact() const { return std::holds_alternative<CompactPairSpec>(kind); }
  const CompactPairSpec& compact() const { return std::get<CompactPairSpec>(kind); }
  const GaussianPairSpec& gaussian() const { return std::get<GaussianPairSpec>(kind); }
  std::size_t dim() const { return 1 + static_cast<std::size_t>(extra_dims); }
  bool operator==(const MixtureSpec&) const = default;
};

inline constexpr double kNuisanceHalfWidth = 0.5;

double component_density(const MixtureSpec& spec, ClassLabel z, double x);
double density(const MixtureSpec& spec, double x);
/// Product density over all coordinates; `point.size()` must equal spec.dim().
double density(const MixtureSpec& spec, std::span<const double> point);
double nuisance_density(const MixtureSpec& spec, double y);

/// Draws the class-bearing coordinate only.
double sample_first(const MixtureSpec& spec, std::optional<ClassLabel> label, Rng& rng);
std::vector<double> sample(const MixtureSpec& spec, std::optional<ClassLabel> label, Rng& rng);

Interval support(const MixtureSpec& spec, ClassLabel z);
/// Valid box for every coordinate of a class-z sample (infinite for Gaussians).
std::vector<Interval> support_box(const MixtureSpec& spec, ClassLabel z);

struct BetaCheck {
  bool holds;
  double worst_ratio;  // max over the grid of max(r, 1/r)
};
BetaCheck verify_beta_bound(const CompactPairSpec& spec, std::size_t grid_size);

nlohmann::json to_json(const MixtureSpec& spec);
MixtureSpec mixture_from_json(const nlohmann::json& doc);

}  // namespace gflow
