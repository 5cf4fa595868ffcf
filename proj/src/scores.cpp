#include "gflow/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gflow {

namespace {

// Shifted weight below e^{-50} is dropped from the quadrature window.
constexpr double kWindowLogCut = 50.0;
constexpr double kSqrt2Pi = 2.5066282746310002;

// Posterior over a support made of `n` pieces. `range(i)` gives the piece
// interval, `eval(i, alpha)` the density on it.
template <class Range, class Eval>
ComponentPosterior posterior_pieces(std::size_t n, Range&& range, Eval&& eval, Interval support,
                                    const SchedulePoint& point, double x,
                                    const QuadratureOptions& opt) {
  const double a = point.a, b2 = point.b2();
  const double center = x / a;
  const double anchor = std::clamp(center, support.lo, support.hi);
  const double dist = std::abs(center - anchor);
  const double sigma = point.b / a;
  const double log_peak = -(x - a * anchor) * (x - a * anchor) / (2.0 * b2);

  // exponent(anchor + u) - log_peak; the offset c0 is formed once so that
  // small u is never added to O(1) quantities.
  const double c0 = a * anchor - x;
  auto shifted = [&](double u) { return -a * u * (2.0 * c0 + a * u) / (2.0 * b2); };

  const double radius = std::sqrt(dist * dist + 2.0 * kWindowLogCut * sigma * sigma);
  double wlo = std::max(support.lo, center - radius);
  double whi = std::min(support.hi, center + radius);
  if (!(whi >= wlo)) { wlo = whi = anchor; }

  auto density_at = [&](double alpha) {
    for (std::size_t i = 0; i < n; ++i) {
      const Interval r = range(i);
      if (alpha >= r.lo && alpha <= r.hi) return eval(i, alpha);
    }
    return 0.0;
  };

  if (whi - wlo <= 1e-12 * std::max(1.0, std::abs(anchor))) {
    // Posterior narrower than the representable window: collapse onto the anchor.
    const double p = density_at(anchor);
    double width;
    if (dist > 0.0) {
      width = sigma * sigma / dist;
    } else {
      const bool at_edge = (anchor == support.lo || anchor == support.hi);
      width = sigma * kSqrt2Pi * (at_edge ? 0.5 : 1.0);
    }
    return {log_peak + std::log(p * width), anchor};
  }

  auto accumulate = [&](double lo, double hi) {
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const Interval r = range(i);
      const double plo = std::max(r.lo, lo), phi = std::min(r.hi, hi);
      if (!(phi > plo)) continue;
      // Integrate in u = alpha - anchor so the exponent keeps full precision
      // on windows far narrower than the spacing of doubles near the anchor.
      auto integrand = [&](double u) {
        const double w = eval(i, anchor + u) * std::exp(shifted(u));
        return std::array<double, 2>{w, u * w};
      };
      const auto m = integrate_gk<2>(integrand, plo - anchor, phi - anchor, opt);
      m0 += m[0];
      m1 += m[1];
    }
    return std::pair{m0, m1};
  };

  auto [m0, m1] = accumulate(wlo, whi);
  if (!(m0 > 0.0)) std::tie(m0, m1) = accumulate(support.lo, support.hi);
  if (!(m0 > 0.0)) return {-std::numeric_limits<double>::infinity(), anchor};
  const double mean = std::clamp(anchor + m1 / m0, support.lo, support.hi);
  return {log_peak + std::log(m0), mean};
}

// 1 / (1 + e^{d}) without overflow.
double logistic_neg(double d) {
  if (d > 0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

}  // namespace

ComponentPosterior component_posterior(const PiecewisePolynomial& density,
                                       const SchedulePoint& point, double x,
                                       const QuadratureOptions& opt) {
  return posterior_pieces(
      density.piece_count(), [&](std::size_t i) { return density.piece(i); },
      [&](std::size_t i, double alpha) { return density.eval_piece(i, alpha); }, density.domain(),
      point, x, opt);
}

ComponentPosterior component_posterior(const std::function<double(double)>& density,
                                       Interval range, const SchedulePoint& point, double x,
                                       const QuadratureOptions& opt) {
  return posterior_pieces(
      1, [&](std::size_t) { return range; }, [&](std::size_t, double alpha) { return density(alpha); },
      range, point, x, opt);
}

PosteriorDiagnostics posterior_compact(const CompactPairSpec& spec, const SchedulePoint& point,
                                       double x, const QuadratureOptions& opt) {
  const auto pos = component_posterior(spec.density_pos, point, x, opt);
  const auto neg = component_posterior(spec.density_neg, point, x, opt);
  const double q_pos = logistic_neg(neg.log_mass - pos.log_mass);
  const double q_neg = logistic_neg(pos.log_mass - neg.log_mass);
  return {q_pos, q_neg, q_pos * pos.mean + q_neg * neg.mean, pos.mean, neg.mean};
}

PosteriorDiagnostics posterior_gaussian(const GaussianPairSpec& spec, const SchedulePoint& point,
                                        double x) {
  const double a = point.a, s0sq = spec.sigma0 * spec.sigma0;
  const double var = a * a * s0sq + point.b2();
  const double logit = 2.0 * a * spec.mu * x / var;  // log q_pos - log q_neg
  const double q_pos = logistic_neg(-logit);
  const double q_neg = logistic_neg(logit);
  const double mean_pos = spec.mu + a * s0sq * (x - a * spec.mu) / var;
  const double mean_neg = -spec.mu + a * s0sq * (x + a * spec.mu) / var;
  return {q_pos, q_neg, q_pos * mean_pos + q_neg * mean_neg, mean_pos, mean_neg};
}

PosteriorDiagnostics posterior(const MixtureSpec& spec, const SchedulePoint& point, double x) {
  if (spec.is_compact()) return posterior_compact(spec.compact(), point, x);
  return posterior_gaussian(spec.gaussian(), point, x);
}

double score_from_mean(const SchedulePoint& point, double x, double posterior_mean) {
  return (point.a * posterior_mean - x) / point.b2();
}

double score_from_posterior(const PosteriorDiagnostics& post, const SchedulePoint& point, double x,
                            std::optional<ClassLabel> label) {
  const double mean = label ? post.mean(*label) : post.mean_uncond;
  return score_from_mean(point, x, mean);
}

double exact_score_compact(const CompactPairSpec& spec, const ScoreQuery& query) {
  const auto& p = query.point;
  if (query.label) {
    const auto c = component_posterior(spec.density(*query.label), p, query.x);
    return score_from_mean(p, query.x, c.mean);
  }
  return score_from_posterior(posterior_compact(spec, p, query.x), p, query.x, std::nullopt);
}

double exact_score_gaussian(const GaussianPairSpec& spec, const ScoreQuery& query) {
  const double a = query.point.a, y = query.x;
  const double var = a * a * spec.sigma0 * spec.sigma0 + query.point.b2();
  if (query.label) return (sign(*query.label) * a * spec.mu - y) / var;
  return (-y + a * spec.mu * std::tanh(a * spec.mu * y / var)) / var;
}

double exact_score(const MixtureSpec& spec, const ScoreQuery& query) {
  if (spec.is_compact()) return exact_score_compact(spec.compact(), query);
  return exact_score_gaussian(spec.gaussian(), query);
}

double nuisance_score(const MixtureSpec& spec, const SchedulePoint& point, double y) {
  if (spec.is_compact()) {
    static const PiecewisePolynomial box =
        PiecewisePolynomial::uniform(-kNuisanceHalfWidth, kNuisanceHalfWidth);
    return score_from_mean(point, y, component_posterior(box, point, y).mean);
  }
  return -y / (point.a * point.a + point.b2());
}

// ---------------------------------------------------------------------------
// Monte Carlo

MCEstimate mc_score_from_draws(std::span<const double> draws, const SchedulePoint& point, double x) {
  const std::size_t n = draws.size();
  if (n < 2) throw std::invalid_argument("Monte-Carlo score needs at least two draws");
  const double a = point.a, b2 = point.b2();
  double max_log = -INFINITY;
  for (double d : draws) max_log = std::max(max_log, -(x - a * d) * (x - a * d) / (2.0 * b2));

  double sk = 0.0, sn = 0.0;
  for (double d : draws) {
    const double r = x - a * d;
    const double k = std::exp(-r * r / (2.0 * b2) - max_log);
    sk += k;
    sn += -r / b2 * k;
  }
  const double log_kernel_mean =
      max_log + std::log(sk / static_cast<double>(n)) - std::log(kSqrt2Pi * point.b);
  if (log_kernel_mean < std::log(1e-300))
    throw DegenerateEstimateError("kernel-mean estimate below 1e-300; query too far in the tail");

  const double ratio = sn / sk;
  double resid = 0.0;
  for (double d : draws) {
    const double r = x - a * d;
    const double k = std::exp(-r * r / (2.0 * b2) - max_log);
    const double e = -r / b2 * k - ratio * k;
    resid += e * e;
  }
  const double nd = static_cast<double>(n);
  const double kbar = sk / nd;
  const double se = std::sqrt(resid / (nd - 1.0) / nd) / kbar;
  return {ratio, se, n};
}

MCEstimate mc_score(const MixtureSpec& spec, const ScoreQuery& query, std::size_t n, Rng& rng) {
  if (n < 100) throw std::invalid_argument("mc_score needs n >= 100");
  std::vector<double> draws(n);
  for (auto& d : draws) d = sample_first(spec, query.label, rng);
  return mc_score_from_draws(draws, query.point, query.x);
}

MonteCarloScoreField::MonteCarloScoreField(const MixtureSpec& spec, std::size_t n,
                                           std::uint64_t seed) {
  if (n < 100) throw std::invalid_argument("Monte-Carlo score field needs n >= 100");
  Rng rng(seed);
  draws_pos_.resize(n);
  draws_neg_.resize(n);
  for (auto& d : draws_pos_) d = sample_first(spec, ClassLabel::Positive, rng);
  for (auto& d : draws_neg_) d = sample_first(spec, ClassLabel::Negative, rng);
}

namespace {

struct ClassSums {
  double log_shift;
  double k;   // sum of shifted kernels
  double kx;  // sum of shifted kernels times the clean draw
};

ClassSums class_sums(const std::vector<double>& draws, const SchedulePoint& point, double x) {
  const double a = point.a, b2 = point.b2();
  double m = -INFINITY;
  for (double d : draws) m = std::max(m, -(x - a * d) * (x - a * d) / (2.0 * b2));
  double k = 0.0, kx = 0.0;
  for (double d : draws) {
    const double w = std::exp(-(x - a * d) * (x - a * d) / (2.0 * b2) - m);
    k += w;
    kx += w * d;
  }
  return {m, k, kx};
}

}  // namespace

std::optional<PosteriorDiagnostics> MonteCarloScoreField::posterior(const SchedulePoint& point,
                                                                    double x) const {
  const auto p = class_sums(draws_pos_, point, x);
  const auto n = class_sums(draws_neg_, point, x);
  const double lp = p.log_shift + std::log(p.k), ln = n.log_shift + std::log(n.k);
  const double q_pos = logistic_neg(ln - lp), q_neg = logistic_neg(lp - ln);
  const double mean_pos = p.kx / p.k, mean_neg = n.kx / n.k;
  return PosteriorDiagnostics{q_pos, q_neg, q_pos * mean_pos + q_neg * mean_neg, mean_pos, mean_neg};
}

double MonteCarloScoreField::score(const SchedulePoint& point, double x,
                                   std::optional<ClassLabel> label) const {
  if (label) {
    const auto c = class_sums(*label == ClassLabel::Positive ? draws_pos_ : draws_neg_, point, x);
    return score_from_mean(point, x, c.kx / c.k);
  }
  return score_from_posterior(*posterior(point, x), point, x, std::nullopt);
}

ScorePair MonteCarloScoreField::score_pair(const SchedulePoint& point, double x,
                                           ClassLabel z) const {
  const auto post = *posterior(point, x);
  return {score_from_posterior(post, point, x, z), score_from_posterior(post, point, x, std::nullopt)};
}

// ---------------------------------------------------------------------------
// Exact field

double ExactScoreField::score(const SchedulePoint& point, double x,
                              std::optional<ClassLabel> label) const {
  return exact_score(spec_, ScoreQuery{point, x, label});
}

ScorePair ExactScoreField::score_pair(const SchedulePoint& point, double x, ClassLabel z) const {
  if (!spec_.is_compact()) {
    return {exact_score_gaussian(spec_.gaussian(), {point, x, z}),
            exact_score_gaussian(spec_.gaussian(), {point, x, std::nullopt})};
  }
  const auto post = posterior_compact(spec_.compact(), point, x);
  return {score_from_posterior(post, point, x, z), score_from_posterior(post, point, x, std::nullopt)};
}

std::optional<PosteriorDiagnostics> ExactScoreField::posterior(const SchedulePoint& point,
                                                               double x) const {
  return gflow::posterior(spec_, point, x);
}

// ---------------------------------------------------------------------------
// Corruption

double corrupted_score(const CorruptionSpec& corruption, const ScoreQuery& query) {
  if (query.x >= corruption.R) return -query.x;
  return corruption.base->score(query.point, query.x, query.label);
}

CorruptedScoreField::CorruptedScoreField(CorruptionSpec corruption)
    : corruption_(std::move(corruption)) {
  if (!(corruption_.R > 0.0) || !std::isfinite(corruption_.R))
    throw std::invalid_argument("corruption cutoff R must be a positive finite number");
  if (!corruption_.base) throw std::invalid_argument("corruption needs a base score field");
}

double CorruptedScoreField::score(const SchedulePoint& point, double x,
                                  std::optional<ClassLabel> label) const {
  return corrupted_score(corruption_, ScoreQuery{point, x, label});
}

ScorePair CorruptedScoreField::score_pair(const SchedulePoint& point, double x,
                                          ClassLabel z) const {
  if (x >= corruption_.R) return {-x, -x};
  return corruption_.base->score_pair(point, x, z);
}

std::optional<PosteriorDiagnostics> CorruptedScoreField::posterior(const SchedulePoint& point,
                                                                   double x) const {
  if (x >= corruption_.R) return std::nullopt;
  return corruption_.base->posterior(point, x);
}

double noised_component_density(const CompactPairSpec& spec, ClassLabel z,
                                const SchedulePoint& point, double x) {
  const auto c = component_posterior(spec.density(z), point, x);
  return std::exp(c.log_mass) / (kSqrt2Pi * point.b);
}

CorruptionError corruption_l2_error(const CompactPairSpec& spec, double R,
                                    const SchedulePoint& point, std::size_t quad_budget) {
  if (!(R >= 2.0)) throw std::invalid_argument("corruption L2 error requires R >= 2");
  const double b = point.b;
  const double norm = std::log(kSqrt2Pi * b);
  auto integrand = [&](double x) {
    const auto pos = component_posterior(spec.density_pos, point, x);
    const auto neg = component_posterior(spec.density_neg, point, x);
    const double dens_pos = std::exp(pos.log_mass - norm);
    const double dens_neg = std::exp(neg.log_mass - norm);
    const double dens = 0.5 * (dens_pos + dens_neg);
    const double q_pos = logistic_neg(neg.log_mass - pos.log_mass);
    const double q_neg = logistic_neg(pos.log_mass - neg.log_mass);
    const double mean = q_pos * pos.mean + q_neg * neg.mean;
    // Estimate is -x on [R, inf), so the pointwise error is score + x.
    const double e_pos = score_from_mean(point, x, pos.mean) + x;
    const double e_unc = score_from_mean(point, x, mean) + x;
    return std::array<double, 2>{e_pos * e_pos * dens_pos, e_unc * e_unc * dens};
  };
  QuadratureOptions opt;
  opt.rel_tol = 1e-10;
  opt.max_subdivisions = std::max<std::size_t>(quad_budget, 1);
  const auto v = integrate_gk<2>(integrand, R, R + 40.0 * b, opt);
  const double bound = kCorruptionBoundConstant * R * std::exp(-R * R / 2.0) / (point.b2() * point.b2());
  return {v[0], v[1], bound};
}

CorruptionError corruption_l2_error(const CorruptionSpec& corruption, const SchedulePoint& point,
                                    std::size_t quad_budget) {
  const auto exact = std::dynamic_pointer_cast<const ExactScoreField>(corruption.base);
  if (!exact || !exact->spec().is_compact())
    throw std::invalid_argument("corruption L2 error needs an exact compact-pair base field");
  return corruption_l2_error(exact->spec().compact(), corruption.R, point, quad_budget);
}

}  // namespace gflow
