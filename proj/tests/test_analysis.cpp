#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gflow/analysis.hpp"
#include "helpers.hpp"

using namespace gflow;

TEST_SUITE("analysis") {

TEST_CASE("quantiles and summaries") {
  const std::vector<double> v = {4.0, 1.0, 3.0, 2.0, 5.0};
  const auto s = summarize(v, Interval{2.0, 4.0});
  CHECK(s.n == 5);
  CHECK(s.mean == 3.0);
  CHECK(s.std == doctest::Approx(std::sqrt(2.5)));
  CHECK(s.quantile(0.5) == 3.0);
  CHECK(s.quantile(0.25) == 2.0);
  CHECK(s.quantile(0.05) == doctest::Approx(1.2));
  CHECK(*s.fraction_in == doctest::Approx(0.6));
  CHECK_THROWS(s.quantile(0.3));
  CHECK_THROWS(summarize(std::vector<double>{}));
}

TEST_CASE("overshoot profile of synthetic paths") {
  const std::vector<double> t = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::vector<double> up = {0.0, 1.0, 1.5, 1.9, 2.0};
  auto p = overshoot_profile(t, up, 2.0);
  CHECK(p.monotone);
  CHECK(p.pullback_depth == 0.0);
  CHECK_FALSE(p.entered_tail);

  const std::vector<double> over = {0.0, 2.5, 3.0, 2.2, 2.0};
  p = overshoot_profile(t, over, 2.0);
  CHECK_FALSE(p.monotone);
  CHECK(p.entered_tail);
  CHECK(p.max_state == 3.0);
  CHECK(p.time_of_max == 0.5);
  CHECK(p.pullback_depth == doctest::Approx(1.0));

  // A dip that recovers is a drawdown but not a pullback.
  const std::vector<double> dip = {0.0, 1.0, 0.5, 1.5, 2.0};
  p = overshoot_profile(t, dip, 2.0);
  CHECK(p.monotone);
  CHECK(p.max_drawdown == doctest::Approx(0.5));
}

TEST_CASE("support error") {
  const std::vector<Interval> box = {{1.0, 2.0}, {-0.5, 0.5}};
  CHECK(support_error({{1.5, 0.0}, {2.0, 0.5}}, box) == 0.0);
  CHECK(support_error({{2.5, 0.0}, {1.5, -1.0}}, box) == doctest::Approx((0.5 + 0.5) / 4.0));
  CHECK_THROWS(support_error({{1.5}}, box));
  CHECK(default_pullback_tolerance(box) == doctest::Approx(0.05));
}

TEST_CASE("select_guidance on synthetic sweeps") {
  const std::vector<Interval> box = {{1.0, 2.0}};
  auto entry = [](double w, double depth, double final) {
    SweepEntry e{w, {}, {}};
    for (int i = 0; i < 5; ++i) {
      e.finals.push_back({final});
      e.profiles.push_back({final + depth, 0.5, final + depth > 2.0, depth, depth <= 1e-6, depth});
    }
    return e;
  };
  std::vector<SweepEntry> sweep = {entry(0, 0.0, 1.5), entry(1, 0.01, 1.8), entry(3, 0.2, 1.99),
                                   entry(10, 0.8, 2.0)};
  auto sel = select_guidance(sweep, box, SelectionRule::Monotonicity, 0.05);
  REQUIRE(sel.recommended_w);
  CHECK(*sel.recommended_w == 1.0);
  CHECK(*sel.support_choice == 10.0);
  CHECK(sel.rationale.size() == 4);

  sel = select_guidance(sweep, box, SelectionRule::SupportError, 0.05);
  CHECK(*sel.recommended_w == 10.0);

  // Gaussian-style example: the support is left once w passes 5.
  std::vector<SweepEntry> leak = {entry(0, 0, 1.5), entry(5, 0, 1.9), entry(10, 0, 2.3)};
  sel = select_guidance(leak, box, SelectionRule::SupportError, 0.05);
  CHECK(*sel.recommended_w == 5.0);

  std::vector<SweepEntry> calm = {entry(0, 0, 1.5), entry(3, 0, 1.8)};
  sel = select_guidance(calm, box, SelectionRule::Monotonicity, 0.05);
  CHECK(*sel.recommended_w == 3.0);
  for (const auto& r : sel.rationale) CHECK(r.note == "no pullback observed");

  std::vector<SweepEntry> wild = {entry(1, 0.5, 2.0)};
  CHECK_FALSE(select_guidance(wild, box, SelectionRule::Monotonicity, 0.05).recommended_w);
}

TEST_CASE("select_guidance rejects strong guidance on the 2-D pair") {
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.5, 2.5), 1);
  const auto box = support_box(spec, ClassLabel::Positive);
  const IntegratorConfig cfg;
  BatchOptions opt;
  opt.retain_trajectories = true;
  std::vector<SweepEntry> sweep;
  for (double w : {0.0, 5.0, 10.0}) {
    const GuidedFlow flow(spec, {w, ClassLabel::Positive, {}});
    const auto batch = sample_batch(flow, cfg, 60, 4, opt);
    SweepEntry e{w, batch.finals(), {}};
    for (const auto& t : batch.trajectories) e.profiles.push_back(overshoot_profile(t, spec));
    sweep.push_back(std::move(e));
  }
  const auto sel = select_guidance(sweep, box, SelectionRule::Monotonicity,
                                   default_pullback_tolerance(box));
  REQUIRE(sel.recommended_w);
  CHECK(*sel.recommended_w == 0.0);
  CHECK(sel.rationale[0].pullback_median <= 1e-6);
  CHECK(sel.rationale[1].pullback_median > default_pullback_tolerance(box));
  CHECK(sel.rationale[2].pullback_median > sel.rationale[1].pullback_median);
}

TEST_CASE("tilted reference matches the dense-grid oracle") {
  const auto golden = testing::load_json("golden_scores.json");
  const auto spec = MixtureSpec::create(GaussianPairSpec::create(1.0, 1.0));
  const auto ref = tilted_reference(spec, 5.0, ClassLabel::Positive, 30001);
  for (const auto& row : golden["tilted_gaussian_w5"]) {
    const double x = row["x"];
    const auto it = std::upper_bound(ref.grid.begin(), ref.grid.end(), x);
    const std::size_t i = static_cast<std::size_t>(it - ref.grid.begin()) - 1;
    const double u = (x - ref.grid[i]) / (ref.grid[i + 1] - ref.grid[i]);
    const double d = (1 - u) * ref.density[i] + u * ref.density[i + 1];
    CAPTURE(x);
    CHECK(d == doctest::Approx(row["density"].get<double>()).epsilon(1e-4));
  }
  CHECK(ref.cdf.back() == 1.0);
  for (std::size_t i = 1; i < ref.cdf.size(); ++i) REQUIRE(ref.cdf[i] >= ref.cdf[i - 1]);
}

TEST_CASE("tilted samples follow their own cdf") {
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  const auto ref = tilted_reference(spec, 10.0, ClassLabel::Positive, 2000, 20000, 3);
  CHECK(ref.samples.size() == 20000);
  CHECK(ks_distance(ref.samples, ref) < 0.015);
  // Disjoint supports: the tilt leaves the component unchanged.
  CHECK(ref.cdf_at(1.5) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS(tilted_reference(spec, 1.0, ClassLabel::Positive, 10));
}

TEST_CASE("ks distances") {
  std::vector<double> u;
  for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000.0);
  CHECK(ks_distance(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) ==
        doctest::Approx(0.0005));
  std::vector<double> shifted;
  for (double x : u) shifted.push_back(x + 0.25);
  CHECK(ks_two_sample(u, shifted) == doctest::Approx(0.25).epsilon(0.01));
  CHECK(ks_two_sample(u, u) == 0.0);
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429));
}

TEST_CASE("reduced gaussian verifiers") {
  const IntegratorConfig cfg;
  CHECK(verify_gaussian_sqrtw(16.0, cfg, 1, 3).pass());
  const auto pos = verify_gaussian_positive(100.0, cfg);
  CHECK(pos.mode == "full");
  CHECK(pos.pass());
  const auto th = verify_gaussian_theorem(9.0, 1000, 2, cfg);
  CHECK(th.pass());
  const auto j = th.to_json();
  CHECK(j["verdict"] == "pass");
  CHECK(j["checks"].size() == 2);
}

TEST_CASE("edge concentration falls back to the percentile trend") {
  const auto spec = CompactPairSpec::uniform_pair(1.0, 2.0);
  std::vector<SweepBatch> sweep = {{0.0, {1.1, 1.5, 1.9}}, {10.0, {1.6, 1.8, 2.0}}};
  auto rep = verify_edge_concentration(sweep, spec);
  CHECK(rep.mode == "trend-only");
  CHECK(rep.pass());
  sweep[1].finals = {1.0, 1.8, 2.0};
  CHECK_FALSE(verify_edge_concentration(sweep, spec).pass());
}

TEST_CASE("corruption decay report") {
  const auto spec = CompactPairSpec::uniform_pair(1.0, 2.0);
  const auto rep = verify_corruption_decay(spec, {2.0, 3.0, 4.0}, {0.25});
  REQUIRE(rep.checks.size() == 2);
  CHECK(rep.checks[0].pass);
  CHECK(rep.details["grid"].size() == 3);
}

TEST_CASE("report serialization") {
  VerificationReport rep;
  rep.claim = "c";
  CHECK_FALSE(rep.pass());
  rep.checks.push_back(Check::make("x", 1.0, Comparison::Less, 2.0));
  rep.checks.push_back(Check::make("y", 2.0, Comparison::GreaterEqual, 2.0));
  CHECK(rep.pass());
  const auto j = rep.to_json();
  CHECK(j["checks"][0]["comparison"] == "<");
  CHECK(j["verdict"] == "pass");
}

}  // TEST_SUITE
