#include <doctest.h>

#include <cmath>

#include "gflow/integrator.hpp"

using namespace gflow;

TEST_SUITE("integrator") {

TEST_CASE("dormand-prince on a linear equation") {
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-12;
  const auto traj = integrate([](double, double x) { return -2.0 * x; }, 1.0, 0.0, 1.0, cfg);
  REQUIRE(traj.ok());
  CHECK(traj.final_state() == doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.times.back() == 1.0);
  for (std::size_t i = 1; i < traj.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);
  CHECK(traj.accepted > 0);
}

TEST_CASE("fixed-step rk4 is fourth order") {
  auto err = [](std::size_t steps) {
    IntegratorConfig cfg = IntegratorConfig::fixed_step_preset();
    cfg.max_steps = steps;
    const auto t = integrate([](double s, double x) { return std::cos(s) * x; }, 1.0, 0.0, 2.0, cfg);
    return std::abs(t.final_state() - std::exp(std::sin(2.0)));
  };
  const double ratio = err(20) / err(40);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.1));
  IntegratorConfig cfg = IntegratorConfig::fixed_step_preset();
  const auto t = integrate([](double, double x) { return x; }, 1.0, 0.0, 1.0, cfg);
  CHECK(t.size() == 1001);
}

TEST_CASE("vector state and record stride") {
  IntegratorConfig cfg;
  cfg.record_every = 5;
  const Drift rot = [](double, std::span<const double> x, std::span<double> dx) {
    dx[0] = -x[1];
    dx[1] = x[0];
  };
  const std::vector<double> x0 = {1.0, 0.0};
  const auto full = integrate(rot, x0, 0.0, M_PI, IntegratorConfig{});
  const auto sparse = integrate(rot, x0, 0.0, M_PI, cfg);
  CHECK(sparse.final_state(0) == doctest::Approx(-1.0).epsilon(1e-7));
  CHECK(std::abs(sparse.final_state(1)) < 1e-7);
  CHECK(sparse.size() < full.size());
  CHECK(sparse.times.back() == M_PI);
  IntegrateOptions ends;
  ends.endpoints_only = true;
  CHECK(integrate(rot, x0, 0.0, M_PI, IntegratorConfig{}, ends).size() == 2);
}

TEST_CASE("running maximum tracks unrecorded steps") {
  IntegrateOptions opt;
  opt.endpoints_only = true;
  const auto traj = integrate([](double s, double) { return std::cos(s); }, 0.0, 0.0, M_PI,
                              IntegratorConfig{}, opt);
  CHECK(traj.max_first > 0.9);
  CHECK(traj.max_first <= 1.0 + 1e-8);
  CHECK(traj.final_state() == doctest::Approx(0.0).scale(1.0).epsilon(1e-7));
}

TEST_CASE("level events are recorded and clamps hold the level") {
  IntegrateOptions opt;
  opt.events.push_back({0, 0.5, false, "half"});
  const auto t = integrate([](double, double) { return 1.0; }, 0.0, 0.0, 1.0, IntegratorConfig{}, opt);
  REQUIRE(t.events.size() == 1);
  CHECK(t.events[0].name == "half");
  CHECK(t.events[0].s == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.events[0].direction == 1);

  IntegrateOptions clamp;
  clamp.events.push_back({0, 0.5, true, "freeze"});
  // Drift pushes upward until the level, then vanishes at and above it.
  const auto c = integrate([](double, double x) { return x >= 0.5 ? 0.0 : 1.0; }, 0.0, 0.0, 1.0,
                           IntegratorConfig{}, clamp);
  CHECK(c.final_state() == 0.5);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.state(i) <= 0.5);
}

TEST_CASE("failures are reported instead of thrown") {
  IntegratorConfig cfg;
  cfg.max_steps = 5;
  const auto t = integrate([](double s, double) { return std::sin(100 * s); }, 0.0, 0.0, 10.0, cfg);
  CHECK(t.status == TrajectoryStatus::StepLimit);
  CHECK_FALSE(t.message.empty());

  const auto blow = integrate([](double, double x) { return x * x; }, 1.0, 0.0, 2.0, IntegratorConfig{});
  CHECK_FALSE(blow.ok());
}

TEST_CASE("endpoint validation") {
  IntegratorConfig cfg;
  cfg.validate_endpoint = true;
  const auto t = integrate([](double, double x) { return -x; }, 1.0, 0.0, 1.0, cfg);
  REQUIRE(t.validation_gap);
  CHECK(*t.validation_gap < 1e-7);
  CHECK(t.endpoint_validated);
}

TEST_CASE("config validation") {
  IntegratorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.horizon = 1.0;
  CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("2 ln 2"));
  cfg = {};
  cfg.rel_tol = 0.0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.t_end_margin = 1.0;
  CHECK_THROWS(cfg.validate());
  CHECK(to_string(TrajectoryStatus::NonFinite) == "non_finite");
}

}  // TEST_SUITE
