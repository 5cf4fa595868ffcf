#include "gflow/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gflow {

namespace {

SchedulePoint make_point(double t, double T, double log_a) {
  const double a = std::exp(log_a);
  // b^2 = 1 - e^{2 log a}, accurate near a = 1.
  const double b = std::max(std::sqrt(std::max(0.0, -std::expm1(2.0 * log_a))), kMinNoise);
  return SchedulePoint{t, T, a, b, a};
}

}  // namespace

SchedulePoint at_time(double t, double T) {
  if (!(T > 0.0)) throw std::domain_error("horizon T must be > 0");
  if (!(t >= 0.0 && t <= T))
    throw std::domain_error("t=" + std::to_string(t) + " outside [0, T]");
  return make_point(t, T, t - T);
}

SchedulePoint at_s(double s, double T) {
  if (!(T > 0.0)) throw std::domain_error("horizon T must be > 0");
  const double s0 = std::exp(-T);
  // Allow a few ulps below e^{-T} so that at_s(at_time(0).s) round-trips.
  if (!(s >= s0 * (1.0 - 1e-14) && s <= 1.0))
    throw std::domain_error("s=" + std::to_string(s) + " outside [e^{-T}, 1]");
  const double log_s = std::log(s);
  const double t = std::clamp(log_s + T, 0.0, T);
  return make_point(t, T, log_s);
}

double gaussian_width(const SchedulePoint& point, double sigma0) {
  if (!(sigma0 > 0.0)) throw std::domain_error("sigma0 must be > 0");
  return std::sqrt(point.a * point.a * sigma0 * sigma0 + point.b2());
}

}  // namespace gflow
