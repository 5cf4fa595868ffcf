#pragma once

namespace gflow {

inline constexpr double kDefaultHorizon = 10.0;
/// Floor on b_t; the 1/b^2 terms of the guided drift are singular at t = T.
inline constexpr double kMinNoise = 1e-8;

/// Noising-schedule quantities at reverse time t: a = e^{t-T}, b = sqrt(1-a^2),
/// and the reparametrized time s = a.
struct SchedulePoint {
  double t;
  double T;
  double a;
  double b;
  double s;

  double b2() const { return b * b; }
};

/// Throws std::domain_error for t outside [0, T].
SchedulePoint at_time(double t, double T = kDefaultHorizon);
/// Throws std::domain_error for s outside [e^{-T}, 1].
SchedulePoint at_s(double s, double T = kDefaultHorizon);

/// sigma_t = sqrt(a^2 sigma0^2 + b^2), the width of each noised Gaussian component.
double gaussian_width(const SchedulePoint& point, double sigma0);

}  // namespace gflow
