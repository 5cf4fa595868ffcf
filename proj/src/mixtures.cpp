#include "gflow/mixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gflow {

namespace {

constexpr double kNormTolerance = 1e-8;

double horner(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * u + *it;
  return v;
}

// Antiderivative of sum c_k u^k from 0 to u.
double horner_integral(const std::vector<double>& c, double u) {
  double v = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) v = v * u + c[k] / static_cast<double>(k + 1);
  return v * u;
}

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

ClassLabel label_from_int(int z) {
  if (z == 1) return ClassLabel::Positive;
  if (z == -1) return ClassLabel::Negative;
  throw std::invalid_argument("class label must be +1 or -1, got " + std::to_string(z));
}

// ---------------------------------------------------------------------------
// PiecewisePolynomial

PiecewisePolynomial::PiecewisePolynomial(std::vector<double> breakpoints,
                                         std::vector<std::vector<double>> coefficients)
    : breakpoints_(std::move(breakpoints)), coefficients_(std::move(coefficients)) {
  require(breakpoints_.size() >= 2, "piecewise density needs at least two breakpoints");
  require(coefficients_.size() + 1 == breakpoints_.size(),
          "piecewise density needs one coefficient list per piece");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    require(std::isfinite(breakpoints_[i]) && std::isfinite(breakpoints_[i + 1]),
            "breakpoints must be finite");
    require(breakpoints_[i] < breakpoints_[i + 1], "breakpoints must be strictly increasing");
    require(!coefficients_[i].empty(), "every piece needs at least one coefficient");
  }
  cumulative_.assign(coefficients_.size() + 1, 0.0);
  for (std::size_t i = 0; i < coefficients_.size(); ++i)
    cumulative_[i + 1] = cumulative_[i] + piece_mass(i, breakpoints_[i + 1] - breakpoints_[i]);
}

PiecewisePolynomial PiecewisePolynomial::uniform(double lo, double hi) {
  require(lo < hi, "uniform density needs lo < hi");
  return PiecewisePolynomial({lo, hi}, {{1.0 / (hi - lo)}});
}

double PiecewisePolynomial::piece_mass(std::size_t i, double u) const {
  return horner_integral(coefficients_[i], u);
}

double PiecewisePolynomial::eval_piece(std::size_t i, double x) const {
  return horner(coefficients_[i], x - breakpoints_[i]);
}

double PiecewisePolynomial::operator()(double x) const {
  if (x < breakpoints_.front() || x > breakpoints_.back()) return 0.0;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it));
  i = std::min(i == 0 ? 0 : i - 1, coefficients_.size() - 1);
  return eval_piece(i, x);
}

double PiecewisePolynomial::integral() const { return cumulative_.back(); }

double PiecewisePolynomial::cdf(double x) const {
  if (x <= breakpoints_.front()) return 0.0;
  if (x >= breakpoints_.back()) return 1.0;
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  std::size_t i = static_cast<std::size_t>(std::distance(breakpoints_.begin(), it)) - 1;
  return (cumulative_[i] + piece_mass(i, x - breakpoints_[i])) / integral();
}

double PiecewisePolynomial::inverse_cdf(double u) const {
  const double total = integral();
  const double target = std::clamp(u, 0.0, 1.0) * total;
  auto it = std::upper_bound(cumulative_.begin() + 1, cumulative_.end(), target);
  std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
  i = std::min(i, coefficients_.size() - 1);
  const double lo = breakpoints_[i];
  const double h = breakpoints_[i + 1] - lo;
  const double need = target - cumulative_[i];
  const auto& c = coefficients_[i];

  double x;
  if (c.size() == 1 || (c.size() == 2 && c[1] == 0.0)) {
    x = lo + need / c[0];
  } else if (c.size() == 2) {
    // c1/2 u^2 + c0 u - need = 0, stable root.
    const double qa = 0.5 * c[1], qb = c[0], qc = -need;
    const double disc = std::max(0.0, qb * qb - 4.0 * qa * qc);
    const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
    double r1 = q / qa, r2 = (q != 0.0) ? qc / q : 0.0;
    double r = (r1 >= -1e-12 * h && r1 <= h * (1 + 1e-12)) ? r1 : r2;
    x = lo + r;
  } else {
    // Monotone antiderivative: safeguarded Newton on [0, h].
    double a = 0.0, b = h, r = 0.5 * h;
    for (int iter = 0; iter < 200; ++iter) {
      const double f = piece_mass(i, r) - need;
      if (f > 0) b = r; else a = r;
      const double d = horner(c, r);
      double next = (d > 0) ? r - f / d : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - r) <= 1e-16 * std::max(1.0, std::abs(lo + r))) { r = next; break; }
      r = next;
    }
    x = lo + r;
  }
  return std::clamp(x, breakpoints_[i], breakpoints_[i + 1]);
}

PiecewisePolynomial PiecewisePolynomial::mirrored() const {
  const std::size_t n = coefficients_.size();
  std::vector<double> bp(n + 1);
  for (std::size_t i = 0; i <= n; ++i) bp[i] = -breakpoints_[n - i];
  std::vector<std::vector<double>> co(n);
  for (std::size_t j = 0; j < n; ++j) {
    // New piece j is the old piece i = n-1-j; old local u = h - v.
    const std::size_t i = n - 1 - j;
    const double h = breakpoints_[i + 1] - breakpoints_[i];
    const auto& c = coefficients_[i];
    std::vector<double> out(c.size(), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
      for (std::size_t m = 0; m <= k; ++m) {
        const double term = c[k] * binomial(k, m) * std::pow(h, static_cast<double>(k - m)) *
                            ((m % 2 == 0) ? 1.0 : -1.0);
        out[m] += term;
      }
    }
    co[j] = std::move(out);
  }
  return PiecewisePolynomial(std::move(bp), std::move(co));
}

std::pair<double, double> PiecewisePolynomial::value_range(std::size_t nodes_per_piece) const {
  double lo = INFINITY, hi = -INFINITY;
  const std::size_t m = std::max<std::size_t>(nodes_per_piece, 2);
  for (std::size_t i = 0; i < coefficients_.size(); ++i) {
    const double a = breakpoints_[i], h = breakpoints_[i + 1] - a;
    for (std::size_t k = 0; k < m; ++k) {
      const double v = eval_piece(i, a + h * static_cast<double>(k) / static_cast<double>(m - 1));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return {lo, hi};
}

// ---------------------------------------------------------------------------
// Specs

CompactPairSpec CompactPairSpec::create(double alpha1, double alpha2, double beta,
                                        PiecewisePolynomial density_pos,
                                        PiecewisePolynomial density_neg) {
  require(std::isfinite(alpha1) && alpha1 > 0.0, "alpha1 must be > 0");
  require(std::isfinite(alpha2) && alpha1 < alpha2, "alpha1 must be < alpha2");
  require(std::isfinite(beta) && beta >= 1.0, "beta must be >= 1");
  const double tol = 1e-12 * alpha2;
  auto dp = density_pos.domain();
  auto dn = density_neg.domain();
  require(std::abs(dp.lo - alpha1) <= tol && std::abs(dp.hi - alpha2) <= tol,
          "density_pos must be supported on [alpha1, alpha2]");
  require(std::abs(dn.lo + alpha2) <= tol && std::abs(dn.hi + alpha1) <= tol,
          "density_neg must be supported on [-alpha2, -alpha1]");
  require(std::abs(density_pos.integral() - 1.0) <= kNormTolerance,
          "density_pos must integrate to 1 on [alpha1, alpha2]");
  require(std::abs(density_neg.integral() - 1.0) <= kNormTolerance,
          "density_neg must integrate to 1 on [-alpha2, -alpha1]");
  require(density_pos.value_range().first >= 0.0, "density_pos must be nonnegative");
  require(density_neg.value_range().first >= 0.0, "density_neg must be nonnegative");
  return CompactPairSpec{alpha1, alpha2, beta, std::move(density_pos), std::move(density_neg)};
}

CompactPairSpec CompactPairSpec::uniform_pair(double alpha1, double alpha2, double beta) {
  require(alpha1 > 0.0, "alpha1 must be > 0");
  require(alpha1 < alpha2, "alpha1 must be < alpha2");
  return create(alpha1, alpha2, beta, PiecewisePolynomial::uniform(alpha1, alpha2),
                PiecewisePolynomial::uniform(-alpha2, -alpha1));
}

GaussianPairSpec GaussianPairSpec::create(double mu, double sigma0) {
  require(std::isfinite(mu), "mu must be finite");
  require(std::isfinite(sigma0) && sigma0 > 0.0, "sigma0 must be > 0");
  return GaussianPairSpec{mu, sigma0};
}

MixtureSpec MixtureSpec::create(std::variant<CompactPairSpec, GaussianPairSpec> kind,
                                int extra_dims) {
  require(extra_dims >= 0, "extra_dims must be >= 0");
  return MixtureSpec{std::move(kind), extra_dims};
}

// ---------------------------------------------------------------------------
// Densities and sampling

namespace {

double normal_pdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace

double component_density(const MixtureSpec& spec, ClassLabel z, double x) {
  if (spec.is_compact()) return spec.compact().density(z)(x);
  const auto& g = spec.gaussian();
  return normal_pdf(x, sign(z) * g.mu, g.sigma0);
}

double density(const MixtureSpec& spec, double x) {
  return 0.5 * component_density(spec, ClassLabel::Positive, x) +
         0.5 * component_density(spec, ClassLabel::Negative, x);
}

double nuisance_density(const MixtureSpec& spec, double y) {
  if (spec.is_compact())
    return (std::abs(y) <= kNuisanceHalfWidth) ? 1.0 / (2.0 * kNuisanceHalfWidth) : 0.0;
  return normal_pdf(y, 0.0, 1.0);
}

double density(const MixtureSpec& spec, std::span<const double> point) {
  if (point.size() != spec.dim())
    throw std::invalid_argument("point dimension does not match the mixture");
  double p = density(spec, point[0]);
  for (std::size_t i = 1; i < point.size(); ++i) p *= nuisance_density(spec, point[i]);
  return p;
}

double sample_first(const MixtureSpec& spec, std::optional<ClassLabel> label, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ClassLabel z;
  if (label) {
    z = *label;
  } else {
    z = unif(rng) < 0.5 ? ClassLabel::Positive : ClassLabel::Negative;
  }
  if (spec.is_compact()) return spec.compact().density(z).inverse_cdf(unif(rng));
  const auto& g = spec.gaussian();
  std::normal_distribution<double> normal(sign(z) * g.mu, g.sigma0);
  return normal(rng);
}

std::vector<double> sample(const MixtureSpec& spec, std::optional<ClassLabel> label, Rng& rng) {
  std::vector<double> out(spec.dim());
  out[0] = sample_first(spec, label, rng);
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (spec.is_compact()) {
      std::uniform_real_distribution<double> u(-kNuisanceHalfWidth, kNuisanceHalfWidth);
      out[i] = u(rng);
    } else {
      std::normal_distribution<double> n(0.0, 1.0);
      out[i] = n(rng);
    }
  }
  return out;
}

Interval support(const MixtureSpec& spec, ClassLabel z) {
  if (!spec.is_compact()) return {-INFINITY, INFINITY};
  const auto& c = spec.compact();
  return z == ClassLabel::Positive ? Interval{c.alpha1, c.alpha2} : Interval{-c.alpha2, -c.alpha1};
}

std::vector<Interval> support_box(const MixtureSpec& spec, ClassLabel z) {
  std::vector<Interval> box{support(spec, z)};
  for (int i = 0; i < spec.extra_dims; ++i) {
    box.push_back(spec.is_compact() ? Interval{-kNuisanceHalfWidth, kNuisanceHalfWidth}
                                    : Interval{-INFINITY, INFINITY});
  }
  return box;
}

BetaCheck verify_beta_bound(const CompactPairSpec& spec, std::size_t grid_size) {
  if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
  // Open supports: sample interior nodes only.
  auto nodes = [&](double lo, double hi) {
    std::vector<double> v(grid_size);
    for (std::size_t i = 0; i < grid_size; ++i)
      v[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(grid_size);
    return v;
  };
  const auto xn = nodes(-spec.alpha2, -spec.alpha1);
  const auto xp = nodes(spec.alpha1, spec.alpha2);
  std::vector<double> pn(grid_size), pp(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    pn[i] = spec.density_neg(xn[i]);
    pp[i] = spec.density_pos(xp[i]);
  }
  double worst = 1.0;
  for (double a : pn) {
    for (double b : pp) {
      double r;
      if (a == 0.0 && b == 0.0) r = 1.0;
      else if (a == 0.0 || b == 0.0) r = INFINITY;
      else r = std::max(a / b, b / a);
      worst = std::max(worst, r);
    }
  }
  return BetaCheck{worst <= spec.beta, worst};
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const MixtureSpec& spec) {
  nlohmann::json j;
  if (spec.is_compact()) {
    const auto& c = spec.compact();
    j["kind"] = "compact";
    j["alpha1"] = c.alpha1;
    j["alpha2"] = c.alpha2;
    j["beta"] = c.beta;
    j["breakpoints"] = {{"pos", c.density_pos.breakpoints()}, {"neg", c.density_neg.breakpoints()}};
    j["coefficients"] = {{"pos", c.density_pos.coefficients()},
                         {"neg", c.density_neg.coefficients()}};
  } else {
    const auto& g = spec.gaussian();
    j["kind"] = "gaussian";
    j["mu"] = g.mu;
    j["sigma0"] = g.sigma0;
  }
  j["extra_dims"] = spec.extra_dims;
  return j;
}

MixtureSpec mixture_from_json(const nlohmann::json& doc) {
  require(doc.is_object(), "mixture spec must be a JSON object");
  static const std::vector<std::string> known = {"kind",   "alpha1",      "alpha2",
                                                 "beta",   "breakpoints", "coefficients",
                                                 "mu",     "sigma0",      "extra_dims"};
  for (const auto& [key, _] : doc.items()) {
    require(std::find(known.begin(), known.end(), key) != known.end(),
            "unknown mixture spec field '" + key + "'");
  }
  require(doc.contains("kind"), "mixture spec needs a 'kind'");
  const std::string kind = doc.at("kind").get<std::string>();
  const int extra_dims = doc.value("extra_dims", 0);
  if (kind == "gaussian") {
    return MixtureSpec::create(
        GaussianPairSpec::create(doc.value("mu", 1.0), doc.value("sigma0", 1.0)), extra_dims);
  }
  require(kind == "compact", "mixture kind must be 'compact' or 'gaussian'");
  require(doc.contains("alpha1") && doc.contains("alpha2"), "compact spec needs alpha1 and alpha2");
  const double a1 = doc.at("alpha1").get<double>();
  const double a2 = doc.at("alpha2").get<double>();
  const double beta = doc.value("beta", 1.0);
  require(a1 > 0.0, "alpha1 must be > 0");
  require(a1 < a2, "alpha1 must be < alpha2");
  PiecewisePolynomial pos = PiecewisePolynomial::uniform(a1, a2);
  std::optional<PiecewisePolynomial> neg;
  if (doc.contains("breakpoints") || doc.contains("coefficients")) {
    require(doc.contains("breakpoints") && doc.contains("coefficients"),
            "breakpoints and coefficients must be given together");
    const auto& bp = doc.at("breakpoints");
    const auto& co = doc.at("coefficients");
    pos = PiecewisePolynomial(bp.at("pos").get<std::vector<double>>(),
                              co.at("pos").get<std::vector<std::vector<double>>>());
    if (bp.contains("neg")) {
      neg = PiecewisePolynomial(bp.at("neg").get<std::vector<double>>(),
                                co.at("neg").get<std::vector<std::vector<double>>>());
    }
  }
  if (!neg) neg = pos.mirrored();
  return MixtureSpec::create(CompactPairSpec::create(a1, a2, beta, std::move(pos), std::move(*neg)),
                             extra_dims);
}

}  // namespace gflow
