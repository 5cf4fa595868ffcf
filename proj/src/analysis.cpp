#include "gflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace gflow {

double quantile_sorted(std::span<const double> sorted, double level) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double h = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double Summary::quantile(double level) const {
  for (std::size_t i = 0; i < kSummaryLevels.size(); ++i)
    if (kSummaryLevels[i] == level) return quantiles[i];
  throw std::invalid_argument("summary does not carry the requested quantile level");
}

Summary summarize(std::span<const double> values, std::optional<Interval> interval) {
  if (values.empty()) throw std::invalid_argument("cannot summarize an empty batch");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  Summary out{sorted.size(), mean, sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0, {}, {}};
  for (std::size_t i = 0; i < kSummaryLevels.size(); ++i)
    out.quantiles[i] = quantile_sorted(sorted, kSummaryLevels[i]);
  if (interval) {
    const auto inside = std::count_if(sorted.begin(), sorted.end(),
                                      [&](double v) { return interval->contains(v); });
    out.fraction_in = static_cast<double>(inside) / n;
  }
  return out;
}

Summary summarize(const SampleBatch& batch, std::optional<Interval> interval) {
  return summarize(batch.final_first(), interval);
}

std::string to_string(Comparison op) {
  switch (op) {
    case Comparison::Less: return "<";
    case Comparison::LessEqual: return "<=";
    case Comparison::Greater: return ">";
    case Comparison::GreaterEqual: return ">=";
  }
  return "?";
}

Check Check::make(std::string name, double observed, Comparison op, double threshold) {
  bool ok = false;
  switch (op) {
    case Comparison::Less: ok = observed < threshold; break;
    case Comparison::LessEqual: ok = observed <= threshold; break;
    case Comparison::Greater: ok = observed > threshold; break;
    case Comparison::GreaterEqual: ok = observed >= threshold; break;
  }
  return {std::move(name), observed, op, threshold, ok};
}

bool VerificationReport::pass() const {
  return !checks.empty() &&
         std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json hyp = nlohmann::json::array();
  for (const auto& h : hypotheses)
    hyp.push_back({{"name", h.name}, {"lhs", h.lhs}, {"rhs", h.rhs}, {"holds", h.holds}});
  nlohmann::json chk = nlohmann::json::array();
  for (const auto& c : checks)
    chk.push_back({{"name", c.name},
                   {"observed", c.observed},
                   {"comparison", to_string(c.op)},
                   {"threshold", c.threshold},
                   {"pass", c.pass}});
  return {{"claim", claim}, {"mode", mode},       {"hypotheses", hyp},
          {"checks", chk},  {"details", details}, {"verdict", verdict()}};
}

// ---------------------------------------------------------------------------

VerificationReport verify_edge_concentration(std::vector<SweepBatch> sweep,
                                             const CompactPairSpec& spec) {
  if (sweep.empty()) throw std::invalid_argument("edge-concentration sweep is empty");
  std::sort(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) { return a.w < b.w; });

  VerificationReport rep;
  rep.claim = "compact pair: guided samples concentrate at the right edge of the support";
  const double a1 = spec.alpha1, a2 = spec.alpha2, beta = spec.beta;
  bool all_hold = true;
  nlohmann::json per_w = nlohmann::json::array();
  std::vector<double> p5;
  for (const auto& b : sweep) {
    const auto sum = summarize(b.finals);
    p5.push_back(sum.quantile(0.05));
    nlohmann::json row = {{"w", b.w}, {"n", sum.n}, {"mean", sum.mean}, {"p5", p5.back()}};
    if (b.w > std::exp(1.0)) {
      const double lw = std::log(b.w);
      const double h1l = lw / (16.0 * std::sqrt(b.w)), h1r = a1 * a2 / beta;
      const double h2l = lw / std::log(lw), h2r = 1024.0 * std::pow(a2 / std::min(a1, 1.0), 2);
      rep.hypotheses.push_back({"w=" + std::to_string(b.w) + ": ln w / (16 sqrt w) <= a1 a2 / beta",
                                h1l, h1r, h1l <= h1r});
      rep.hypotheses.push_back(
          {"w=" + std::to_string(b.w) + ": ln w / ln ln w >= 1024 (a2 / min(a1, 1))^2", h2l, h2r,
           h2l >= h2r});
      all_hold = all_hold && h1l <= h1r && h2l >= h2r;
      const double lo = a2 * (1.0 - 32.0 / std::sqrt(lw));
      const double inside =
          static_cast<double>(std::count_if(b.finals.begin(), b.finals.end(),
                                            [&](double x) { return x > lo && x < a2; })) /
          static_cast<double>(b.finals.size());
      const double prob = 1.0 - std::exp(-b.w * a1 * a1 / (512.0 * beta * beta));
      row["interval"] = {lo, a2};
      row["fraction_in_interval"] = inside;
      row["theorem_probability"] = prob;
    } else {
      all_hold = false;
      rep.hypotheses.push_back({"w=" + std::to_string(b.w) + ": w > e (theorem regime)", b.w,
                                std::exp(1.0), false});
    }
    per_w.push_back(row);
  }
  rep.details["sweep"] = per_w;

  if (all_hold) {
    rep.mode = "full";
    for (const auto& row : per_w)
      rep.checks.push_back(Check::make("w=" + row["w"].dump() + " fraction in interval",
                                       row["fraction_in_interval"].get<double>(),
                                       Comparison::GreaterEqual,
                                       row["theorem_probability"].get<double>()));
  } else {
    rep.mode = "trend-only";
    double min_step = INFINITY;
    for (std::size_t i = 1; i < p5.size(); ++i) min_step = std::min(min_step, p5[i] - p5[i - 1]);
    if (p5.size() < 2) min_step = 0.0;
    rep.checks.push_back(
        Check::make("smallest increase of the 5th percentile between consecutive w", min_step,
                    Comparison::Greater, 0.0));
  }
  return rep;
}

VerificationReport verify_gaussian_positive(double w, const IntegratorConfig& cfg) {
  VerificationReport rep;
  rep.claim = "reduced Gaussian flow: sign of x(1) at the boundary initial conditions";
  rep.hypotheses.push_back({"w >= 100", w, 100.0, w >= 100.0});
  if (w < 100.0) rep.mode = "trend-only";
  const double up = -2.0 * w + 26.0 * std::log(w) + 0.01;
  const double down = -2.0 * w - 1.01;
  const auto t_up = integrate_reduced_gaussian(w, up, cfg, true);
  const auto t_down = integrate_reduced_gaussian(w, down, cfg, true);
  rep.details = {{"w", w}, {"x0_positive", up}, {"x0_negative", down}};
  rep.checks.push_back(Check::make("x(1) from x0 = -2w + 26 ln w + 0.01", t_up.final_state(),
                                   Comparison::GreaterEqual, 0.0));
  rep.checks.push_back(Check::make("x(1) from x0 = -2w - 1.01", t_down.final_state(),
                                   Comparison::Less, 0.0));
  return rep;
}

VerificationReport verify_gaussian_sqrtw(double w, const IntegratorConfig& cfg,
                                         std::uint64_t seed, std::size_t extra) {
  if (!(w >= 0.0)) throw std::invalid_argument("verify_gaussian_sqrtw needs w >= 0");
  VerificationReport rep;
  rep.claim = "reduced Gaussian flow: x0 >= -sqrt(w+1)/2 moves to x(1) >= sqrt(w+1)/4";
  const double root = std::sqrt(w + 1.0);
  const double x0 = -root / 2.0, target = root / 4.0;
  rep.details = {{"w", w}, {"x0", x0}, {"target", target}};
  rep.checks.push_back(Check::make("x(1) from x0 = -sqrt(w+1)/2",
                                   integrate_reduced_gaussian(w, x0, cfg, true).final_state(),
                                   Comparison::Greater, target));
  Rng rng(seed);
  std::exponential_distribution<double> offset(1.0);
  for (std::size_t i = 0; i < extra; ++i) {
    const double start = x0 + offset(rng);
    rep.checks.push_back(Check::make("x(1) from x0 = " + std::to_string(start),
                                     integrate_reduced_gaussian(w, start, cfg, true).final_state(),
                                     Comparison::Greater, target));
  }
  return rep;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

VerificationReport verify_gaussian_theorem(double w, std::size_t n, std::uint64_t seed,
                                           const IntegratorConfig& cfg, int workers) {
  if (n < 1000) throw std::invalid_argument("verify_gaussian_theorem needs n >= 1000");
  VerificationReport rep;
  rep.claim = "reduced Gaussian flow from N(0,1): x(1) >= 0 and x(1) >= sqrt(w+1)/4 w.h.p.";
  BatchOptions opt;
  opt.workers = workers;
  const auto batch = sample_reduced_gaussian(w, cfg, n, seed, opt);
  const auto finals = batch.final_first();
  const double nd = static_cast<double>(n);
  const double target = std::sqrt(w + 1.0) / 4.0;
  const double frac_pos =
      static_cast<double>(std::count_if(finals.begin(), finals.end(), [](double x) { return x >= 0; })) / nd;
  const double frac_root = static_cast<double>(std::count_if(
                               finals.begin(), finals.end(), [&](double x) { return x >= target; })) /
                           nd;
  // Normal mass of the initial conditions that provably end above each level.
  const double mass_pos = 1.0 - normal_cdf(-2.0 * w - 1.0);
  const double mass_root = normal_cdf(std::sqrt(w + 1.0) / 2.0);
  auto slack = [&](double p) { return 3.0 * std::sqrt(p * (1.0 - p) / nd); };
  rep.details = {{"w", w},
                 {"n", n},
                 {"failures", batch.failures()},
                 {"region_mass_positive", mass_pos},
                 {"region_mass_sqrt", mass_root}};
  rep.checks.push_back(Check::make("fraction x(1) >= 0", frac_pos, Comparison::GreaterEqual,
                                   std::min(1.0, mass_pos - slack(mass_pos))));
  rep.checks.push_back(Check::make("fraction x(1) >= sqrt(w+1)/4", frac_root,
                                   Comparison::GreaterEqual, mass_root - slack(mass_root)));
  return rep;
}

// ---------------------------------------------------------------------------

OvershootProfile overshoot_profile(std::span<const double> times, std::span<const double> values,
                                   double right_edge, double tolerance) {
  if (values.empty() || times.size() != values.size())
    throw std::invalid_argument("overshoot profile needs matching, nonempty times and values");
  OvershootProfile p{values[0], times[0], false, 0.0, true, 0.0};
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] > p.max_state) {
      p.max_state = values[i];
      p.time_of_max = times[i];
    }
    p.max_drawdown = std::max(p.max_drawdown, p.max_state - values[i]);
  }
  p.pullback_depth = std::max(0.0, p.max_state - values.back());
  p.entered_tail = p.max_state > right_edge;
  p.monotone = p.pullback_depth <= tolerance;
  return p;
}

OvershootProfile overshoot_profile(const Trajectory& traj, const MixtureSpec& spec,
                                   double tolerance) {
  if (traj.size() == 0) throw std::invalid_argument("overshoot profile of an empty trajectory");
  std::vector<double> values(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) values[i] = traj.state(i, 0);
  auto p = overshoot_profile(traj.times, values, support(spec, ClassLabel::Positive).hi, tolerance);
  if (traj.max_first > p.max_state) {
    p.max_state = traj.max_first;
    p.time_of_max = traj.max_first_s;
    p.max_drawdown = std::max(p.max_drawdown, p.max_state - values.back());
    p.pullback_depth = std::max(0.0, p.max_state - values.back());
    p.entered_tail = p.max_state > support(spec, ClassLabel::Positive).hi;
    p.monotone = p.pullback_depth <= tolerance;
  }
  return p;
}

double freeze_cutoff_from_overshoot(const MixtureSpec& spec, double w, std::size_t n,
                                    std::uint64_t seed, const IntegratorConfig& cfg, double factor,
                                    int workers) {
  GuidanceConfig g;
  g.w = w;
  const GuidedFlow flow(spec, g);
  BatchOptions opt;
  opt.workers = workers;
  const auto batch = sample_batch(flow, cfg, n, seed, opt);
  std::vector<double> maxima;
  for (const auto& o : batch.outcomes)
    if (o.status == TrajectoryStatus::Ok) maxima.push_back(o.max_first);
  if (maxima.empty()) throw std::runtime_error("every uncorrupted trajectory failed");
  std::sort(maxima.begin(), maxima.end());
  return factor * quantile_sorted(maxima, 0.5);
}

VerificationReport verify_freeze(const MixtureSpec& spec, const IntegratorConfig& cfg,
                                 const FreezeOptions& opt) {
  const double R = opt.R.value_or(std::log(opt.w) / 32.0);
  VerificationReport rep;
  rep.claim = "corrupted score: guided trajectories freeze at the cutoff R";
  GuidanceConfig g;
  g.w = opt.w;
  g.source.kind = ScoreSourceKind::Corrupted;
  g.source.corruption_R = R;
  const GuidedFlow flow(spec, g);
  BatchOptions bopt;
  bopt.workers = opt.workers;
  const auto batch = sample_batch(flow, cfg, opt.n, opt.seed, bopt);

  std::size_t frozen = 0, crossed = 0, crossed_frozen = 0;
  for (const auto& o : batch.outcomes) {
    if (o.status != TrajectoryStatus::Ok) continue;
    const bool at_r = std::abs(o.final_state[0] - R) <= opt.tolerance;
    frozen += at_r;
    if (o.initial[0] < R && o.max_first >= R) {
      ++crossed;
      crossed_frozen += at_r;
    }
  }
  const double nd = static_cast<double>(opt.n);
  const double bound = 1.0 - std::exp(-opt.w / 8.0);

  // Pointwise: the corrupted guided drift vanishes on [R, R + 10] across the schedule.
  double worst_drift = 0.0;
  for (double s : {1e-3, 0.1, 0.5, 0.9, 0.999})
    for (int k = 0; k <= 50; ++k) {
      const double x = R + 0.2 * k;
      double state[3] = {x, 0.0, 0.0};
      double d[3];
      flow.drift_s(s, std::span<const double>(state, spec.dim()), std::span<double>(d, spec.dim()));
      worst_drift = std::max(worst_drift, std::abs(d[0]));
    }

  rep.details = {{"w", opt.w},
                 {"R", R},
                 {"n", opt.n},
                 {"failures", batch.failures()},
                 {"crossed", crossed},
                 {"crossed_and_frozen", crossed_frozen},
                 {"theorem_probability", bound}};
  rep.checks.push_back(Check::make("fraction of finals within tolerance of R",
                                   static_cast<double>(frozen) / nd, Comparison::GreaterEqual,
                                   bound));
  rep.checks.push_back(Check::make("max |drift| for x >= R", worst_drift, Comparison::LessEqual, 0.0));
  return rep;
}

VerificationReport verify_corruption_decay(const CompactPairSpec& spec, std::vector<double> Rs,
                                           std::vector<double> ts, double T) {
  if (Rs.empty() || ts.empty()) throw std::invalid_argument("empty corruption grid");
  std::sort(Rs.begin(), Rs.end());
  std::sort(ts.begin(), ts.end());
  VerificationReport rep;
  rep.claim = "corrupted-score L2 error decays in the cutoff R and in the noise time t";
  std::vector<std::vector<CorruptionError>> e(ts.size());
  nlohmann::json table = nlohmann::json::array();
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (double R : Rs) {
      e[i].push_back(corruption_l2_error(spec, R, at_time(T - ts[i], T), 4000));
      const auto& v = e[i].back();
      table.push_back({{"t", ts[i]}, {"R", R}, {"error_pos", v.error_pos},
                       {"error_uncond", v.error_uncond}, {"bound", v.bound}});
      worst_ratio = std::max({worst_ratio, v.error_pos / v.bound, v.error_uncond / v.bound});
    }
  rep.details["grid"] = table;

  // Smallest relative drop between neighbours; positive iff strictly decreasing.
  auto drop = [](double before, double after) { return (before - after) / before; };
  double in_r = INFINITY, in_t = INFINITY;
  for (std::size_t i = 0; i < ts.size(); ++i)
    for (std::size_t j = 0; j + 1 < Rs.size(); ++j)
      in_r = std::min({in_r, drop(e[i][j].error_pos, e[i][j + 1].error_pos),
                       drop(e[i][j].error_uncond, e[i][j + 1].error_uncond)});
  for (std::size_t j = 0; j < Rs.size(); ++j)
    for (std::size_t i = 0; i + 1 < ts.size(); ++i)
      in_t = std::min({in_t, drop(e[i][j].error_pos, e[i + 1][j].error_pos),
                       drop(e[i][j].error_uncond, e[i + 1][j].error_uncond)});
  if (Rs.size() > 1)
    rep.checks.push_back(Check::make("smallest relative decrease in R", in_r, Comparison::Greater, 0.0));
  if (ts.size() > 1)
    rep.checks.push_back(Check::make("smallest relative decrease in t", in_t, Comparison::Greater, 0.0));
  rep.checks.push_back(Check::make("largest error / bound", worst_ratio, Comparison::LessEqual, 1.0));
  return rep;
}

double support_error(const std::vector<std::vector<double>>& samples,
                     const std::vector<Interval>& box) {
  if (samples.empty()) throw std::invalid_argument("support error of an empty batch");
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& x : samples) {
    if (x.size() != box.size()) throw std::invalid_argument("sample and box dimensions differ");
    for (std::size_t c = 0; c < x.size(); ++c) {
      if (!std::isfinite(box[c].lo) || !std::isfinite(box[c].hi))
        throw std::invalid_argument("support box must be finite");
      total += std::max({0.0, box[c].lo - x[c], x[c] - box[c].hi});
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double default_pullback_tolerance(const std::vector<Interval>& box) {
  if (box.empty()) throw std::invalid_argument("empty support box");
  return 0.05 * box[0].width();
}

GuidanceSelection select_guidance(std::vector<SweepEntry> sweep, const std::vector<Interval>& box,
                                  SelectionRule rule, double pullback_tol) {
  if (sweep.empty()) throw std::invalid_argument("guidance sweep is empty");
  std::sort(sweep.begin(), sweep.end(), [](const auto& a, const auto& b) { return a.w < b.w; });
  GuidanceSelection out;
  out.rule = rule;
  bool all_monotone = true;
  for (const auto& e : sweep) {
    GuidanceRationale r{e.w, NAN, NAN, false, false, ""};
    if (!e.profiles.empty()) {
      std::vector<double> depth;
      for (const auto& p : e.profiles) depth.push_back(p.pullback_depth);
      std::sort(depth.begin(), depth.end());
      r.pullback_median = quantile_sorted(depth, 0.5);
      r.monotone_ok = r.pullback_median <= pullback_tol;
    }
    if (!e.finals.empty()) {
      r.support_error = support_error(e.finals, box);
      r.support_ok = r.support_error == 0.0;
    }
    all_monotone = all_monotone && r.monotone_ok;
    if (r.monotone_ok) out.monotone_choice = e.w;
    if (r.support_ok) out.support_choice = e.w;
    r.note = (r.monotone_ok ? "median pullback within tolerance" : "pullback beyond tolerance");
    r.note += r.support_ok ? "; samples inside support" : "; samples outside support";
    out.rationale.push_back(r);
  }
  if (rule == SelectionRule::Monotonicity && all_monotone)
    for (auto& r : out.rationale) r.note = "no pullback observed";
  out.recommended_w = rule == SelectionRule::Monotonicity ? out.monotone_choice : out.support_choice;
  return out;
}

// ---------------------------------------------------------------------------

double TiltedReference::cdf_at(double x) const {
  if (x <= grid.front()) return 0.0;
  if (x >= grid.back()) return 1.0;
  const auto it = std::upper_bound(grid.begin(), grid.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - grid.begin()) - 1;
  const double h = grid[i + 1] - grid[i], u = x - grid[i];
  // Exact CDF of the piecewise-linear density.
  const double slope = (density[i + 1] - density[i]) / h;
  return cdf[i] + density[i] * u + 0.5 * slope * u * u;
}

TiltedReference tilted_reference(const MixtureSpec& spec, double w, ClassLabel target,
                                 std::size_t grid_size, std::size_t n_samples,
                                 std::uint64_t seed) {
  if (grid_size < 1000) throw std::invalid_argument("tilted reference needs grid_size >= 1000");
  if (!(w >= -1.0)) throw std::invalid_argument("guidance strength w must be >= -1");
  Interval range;
  if (spec.is_compact()) {
    // Supports are disjoint, so the tilt vanishes off the target support.
    range = support(spec, target);
  } else {
    const auto& g = spec.gaussian();
    const double c = sign(target) * g.mu;
    range = {c - 15.0 * g.sigma0, c + 15.0 * g.sigma0};
  }
  TiltedReference ref;
  ref.grid.resize(grid_size);
  std::vector<double> logd(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) {
    const double x = i + 1 == grid_size
                         ? range.hi
                         : range.lo + range.width() * static_cast<double>(i) /
                                          static_cast<double>(grid_size - 1);
    ref.grid[i] = x;
    const double pz = component_density(spec, target, x);
    const double po = component_density(spec, opposite(target), x);
    if (!(pz > 0.0)) {
      logd[i] = -INFINITY;
      continue;
    }
    // p(x) p(z|x)^{1+w} with p(z|x) = p_z / (p_z + p_{-z}).
    const double log_post = -std::log1p(po / pz);
    logd[i] = std::log(0.5 * (pz + po)) + (1.0 + w) * log_post;
  }
  const double peak = *std::max_element(logd.begin(), logd.end());
  if (!std::isfinite(peak)) throw std::runtime_error("tilted density is not normalizable");
  ref.density.resize(grid_size);
  for (std::size_t i = 0; i < grid_size; ++i) ref.density[i] = std::exp(logd[i] - peak);
  ref.cdf.assign(grid_size, 0.0);
  for (std::size_t i = 1; i < grid_size; ++i)
    ref.cdf[i] = ref.cdf[i - 1] +
                 0.5 * (ref.density[i] + ref.density[i - 1]) * (ref.grid[i] - ref.grid[i - 1]);
  const double total = ref.cdf.back();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::runtime_error("tilted density is not normalizable");
  for (std::size_t i = 0; i < grid_size; ++i) {
    ref.density[i] /= total;
    ref.cdf[i] /= total;
  }
  ref.cdf.back() = 1.0;

  if (n_samples > 0) {
    Rng rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ref.samples.resize(n_samples);
    for (auto& s : ref.samples) {
      const double u = unif(rng);
      // Bisection on the exact piecewise-quadratic CDF.
      double lo = ref.grid.front(), hi = ref.grid.back();
      for (int it = 0; it < 100 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        (ref.cdf_at(mid) < u ? lo : hi) = mid;
      }
      s = 0.5 * (lo + hi);
    }
  }
  return ref;
}

double ks_distance(std::span<const double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("KS distance of an empty sample");
  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_distance(std::span<const double> sample, const TiltedReference& reference) {
  return ks_distance(sample, [&](double x) { return reference.cdf_at(x); });
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS distance of an empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / static_cast<double>(x.size()) -
                             static_cast<double>(j) / static_cast<double>(y.size())));
  }
  return d;
}

Divergence divergence_from_tilted(std::span<const double> finals, const TiltedReference& tilted) {
  return {ks_distance(finals, tilted)};
}

}  // namespace gflow
