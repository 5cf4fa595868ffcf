#include "gflow/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace gflow {

IntegratorConfig IntegratorConfig::fixed_step_preset() {
  IntegratorConfig cfg;
  cfg.method = IntegratorMethod::Rk4Fixed;
  cfg.max_steps = 1000;
  cfg.horizon = 10.0;
  return cfg;
}

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("integrator rel_tol must be positive");
  if (!(abs_tol >= 0.0)) throw std::invalid_argument("integrator abs_tol must be non-negative");
  if (max_steps == 0) throw std::invalid_argument("integrator max_steps must be positive");
  if (!(t_end_margin >= 0.0 && t_end_margin < 1.0))
    throw std::invalid_argument("integrator t_end_margin must lie in [0, 1)");
  if (record_every == 0) throw std::invalid_argument("integrator record_every must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("integrator horizon must be a positive finite number");
  if (horizon < 2.0 * std::numbers::ln2)
    throw std::invalid_argument("integrator horizon must satisfy T >= 2 ln 2");
}

std::string to_string(TrajectoryStatus status) {
  switch (status) {
    case TrajectoryStatus::Ok: return "ok";
    case TrajectoryStatus::StepLimit: return "step_limit";
    case TrajectoryStatus::NonFinite: return "non_finite";
  }
  return "unknown";
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

class Recorder {
 public:
  Recorder(Trajectory& traj, const IntegratorConfig& cfg, const IntegrateOptions& opt)
      : traj_(traj), cfg_(cfg), opt_(opt) {}

  void push(double s, std::span<const double> y) {
    traj_.times.push_back(s);
    traj_.states.insert(traj_.states.end(), y.begin(), y.end());
    if (opt_.diagnostics) traj_.diagnostics.push_back(opt_.diagnostics(s, y));
  }

  // Called after each accepted step.
  void step(double s, std::span<const double> y) {
    ++count_;
    if (y[0] > traj_.max_first) {
      traj_.max_first = y[0];
      traj_.max_first_s = s;
    }
    pending_s_ = s;
    pending_.assign(y.begin(), y.end());
    have_pending_ = true;
    if (!opt_.endpoints_only && count_ % cfg_.record_every == 0) {
      push(s, y);
      have_pending_ = false;
    }
  }

  void finish() {
    if (have_pending_) push(pending_s_, pending_);
    have_pending_ = false;
  }

 private:
  Trajectory& traj_;
  const IntegratorConfig& cfg_;
  const IntegrateOptions& opt_;
  std::size_t count_ = 0;
  bool have_pending_ = false;
  double pending_s_ = 0.0;
  std::vector<double> pending_;
};

// Handles events on the accepted step (s0, y0) -> (s1, y1). Returns true when
// a clamping event truncated the step; s1 and y1 are then updated.
bool apply_events(const std::vector<LevelEvent>& events, Trajectory& traj, double s0,
                  std::span<const double> y0, double& s1, std::vector<double>& y1) {
  for (const auto& ev : events) {
    const double g0 = y0[ev.coordinate] - ev.level;
    const double g1 = y1[ev.coordinate] - ev.level;
    const bool up = g0 < 0.0 && g1 >= 0.0;
    const bool down = g0 > 0.0 && g1 <= 0.0;
    if (!up && !down) continue;
    const double theta = g0 / (g0 - g1);
    const double sc = s0 + theta * (s1 - s0);
    traj.events.push_back({ev.name, sc, up ? 1 : -1});
    if (up && ev.clamp_upward) {
      for (std::size_t i = 0; i < y1.size(); ++i) y1[i] = y0[i] + theta * (y1[i] - y0[i]);
      y1[ev.coordinate] = ev.level;
      s1 = std::max(sc, s0);
      return true;
    }
  }
  return false;
}

void check_args(std::span<const double> x0, double s_start, double s_end,
                const IntegratorConfig& cfg) {
  cfg.validate();
  if (x0.empty()) throw std::invalid_argument("initial state is empty");
  if (!(s_end > s_start)) throw std::invalid_argument("integration interval is empty");
}

Trajectory run_dopri(const Drift& f, std::span<const double> x0, double s_start, double s_end,
                     const IntegratorConfig& cfg, const IntegrateOptions& opt) {
  const std::size_t n = x0.size();
  Trajectory traj;
  traj.dim = n;
  Recorder rec(traj, cfg, opt);

  std::vector<double> y(x0.begin(), x0.end()), ynew(n), yerr(n), tmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);
  auto eval = [&](double s, const std::vector<double>& x, std::vector<double>& out) {
    f(s, x, out);
    ++traj.evaluations;
  };

  rec.push(s_start, y);
  traj.max_first = y[0];
  traj.max_first_s = s_start;
  if (!all_finite(y)) {
    traj.status = TrajectoryStatus::NonFinite;
    traj.message = "initial state is not finite";
    return traj;
  }

  double s = s_start;
  eval(s, y, k1);

  auto norm_of = [&](const std::vector<double>& v, const std::vector<double>& base) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(base[i]);
      acc += (v[i] / sc) * (v[i] / sc);
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  // Initial step (Hairer, Norsett & Wanner, II.4).
  const double span = s_end - s_start;
  double h;
  {
    const double d0 = norm_of(y, y), d1 = norm_of(k1, y);
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, span);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h0 * k1[i];
    eval(s + h0, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) yerr[i] = k2[i] - k1[i];
    const double d2 = norm_of(yerr, y) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    h = std::min({100.0 * h0, h1, span});
    if (!std::isfinite(h) || h <= 0.0) h = 1e-6 * span;
  }

  constexpr double safety = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
  constexpr double fac_min = 0.2, fac_max = 10.0;
  double facold = 1e-4;
  bool last_rejected = false;

  while (s < s_end) {
    if (traj.accepted + traj.rejected >= cfg.max_steps) {
      traj.status = TrajectoryStatus::StepLimit;
      traj.message = "step budget of " + std::to_string(cfg.max_steps) + " exhausted at s = " +
                     std::to_string(s);
      break;
    }
    bool final_step = false;
    if (s + h >= s_end) {
      h = s_end - s;
      final_step = true;
    }

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    eval(s + c2 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    eval(s + c3 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    eval(s + c4 * h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    eval(s + c5 * h, tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    const double s_next = final_step ? s_end : s + h;
    eval(s_next, tmp, k6);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
    eval(s_next, ynew, k7);
    for (std::size_t i = 0; i < n; ++i)
      yerr[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (yerr[i] / sc) * (yerr[i] / sc);
    }
    err = std::sqrt(err / static_cast<double>(n));

    if (!std::isfinite(err) || !all_finite(ynew) || !all_finite(k7)) {
      ++traj.rejected;
      h *= fac_min;
      last_rejected = true;
      if (h <= 1e-14 * std::max(1.0, std::abs(s))) {
        traj.status = TrajectoryStatus::NonFinite;
        traj.message = "non-finite drift near s = " + std::to_string(s);
        break;
      }
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    double fac = fac11 / std::pow(facold, beta);
    fac = std::clamp(fac / safety, 1.0 / fac_max, 1.0 / fac_min);
    double hnew = h / fac;

    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      ++traj.accepted;
      double s1 = s_next;
      const bool clamped = apply_events(opt.events, traj, s, y, s1, ynew);
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      s = s1;
      y.swap(ynew);
      if (clamped) {
        eval(s, y, k1);
      } else {
        k1.swap(k7);
      }
      rec.step(s, y);
      h = hnew;
    } else {
      hnew = h / std::min(1.0 / fac_min, fac11 / safety);
      ++traj.rejected;
      last_rejected = true;
      h = hnew;
    }
  }
  rec.finish();
  return traj;
}

Trajectory run_rk4(const Drift& f, std::span<const double> x0, double s_start, double s_end,
                   const IntegratorConfig& cfg, const IntegrateOptions& opt) {
  const std::size_t n = x0.size();
  Trajectory traj;
  traj.dim = n;
  Recorder rec(traj, cfg, opt);
  std::vector<double> y(x0.begin(), x0.end()), ynew(n), tmp(n), k1(n), k2(n), k3(n), k4(n);
  auto eval = [&](double s, const std::vector<double>& x, std::vector<double>& out) {
    f(s, x, out);
    ++traj.evaluations;
  };
  rec.push(s_start, y);
  traj.max_first = y[0];
  traj.max_first_s = s_start;

  const std::size_t steps = cfg.max_steps;
  const double h0 = (s_end - s_start) / static_cast<double>(steps);
  double s = s_start;
  for (std::size_t k = 0; k < steps && s < s_end; ++k) {
    const double target = k + 1 == steps ? s_end : s_start + static_cast<double>(k + 1) * h0;
    const double h = target - s;
    if (!(h > 0.0)) continue;
    eval(s, y, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
    eval(s + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
    eval(s + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
    eval(target, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ynew[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    if (!all_finite(ynew)) {
      traj.status = TrajectoryStatus::NonFinite;
      traj.message = "non-finite state at s = " + std::to_string(target);
      break;
    }
    ++traj.accepted;
    double s1 = target;
    apply_events(opt.events, traj, s, y, s1, ynew);
    s = s1;
    y.swap(ynew);
    rec.step(s, y);
    // A clamp shortens this step; the remaining steps keep the uniform grid.
    if (s < target) --k;
  }
  rec.finish();
  return traj;
}

Trajectory run(const Drift& f, std::span<const double> x0, double s_start, double s_end,
               const IntegratorConfig& cfg, const IntegrateOptions& opt) {
  return cfg.method == IntegratorMethod::DormandPrince ? run_dopri(f, x0, s_start, s_end, cfg, opt)
                                                       : run_rk4(f, x0, s_start, s_end, cfg, opt);
}

}  // namespace

Trajectory integrate(const Drift& drift, std::span<const double> x0, double s_start, double s_end,
                     const IntegratorConfig& cfg, const IntegrateOptions& opt) {
  check_args(x0, s_start, s_end, cfg);
  Trajectory traj = run(drift, x0, s_start, s_end, cfg, opt);
  if (cfg.validate_endpoint && cfg.method == IntegratorMethod::DormandPrince && traj.ok()) {
    IntegratorConfig half = cfg;
    half.rel_tol *= 0.5;
    half.abs_tol *= 0.5;
    half.validate_endpoint = false;
    IntegrateOptions bare;
    bare.events = opt.events;
    bare.endpoints_only = true;
    const Trajectory check = run(drift, x0, s_start, s_end, half, bare);
    if (check.ok()) {
      double gap = 0.0, scale = 0.0;
      for (std::size_t c = 0; c < traj.dim; ++c) {
        gap = std::max(gap, std::abs(traj.final_state(c) - check.final_state(c)));
        scale = std::max(scale, std::abs(traj.final_state(c)));
      }
      traj.validation_gap = gap;
      traj.endpoint_validated = gap < 10.0 * (cfg.rel_tol * scale + cfg.abs_tol);
    }
  }
  return traj;
}

Trajectory integrate(const ScalarDrift& drift, double x0, double s_start, double s_end,
                     const IntegratorConfig& cfg, const IntegrateOptions& opt) {
  const Drift vec = [&drift](double s, std::span<const double> x, std::span<double> dx) {
    dx[0] = drift(s, x[0]);
  };
  const double init[1] = {x0};
  return integrate(vec, std::span<const double>(init, 1), s_start, s_end, cfg, opt);
}

}  // namespace gflow
