#include <doctest.h>

#include <cmath>

#include "gflow/scores.hpp"
#include "helpers.hpp"

using namespace gflow;

namespace {

CompactPairSpec ramp_pair() {
  const PiecewisePolynomial ramp({1.0, 3.0}, {{0.25, 0.25}});
  return CompactPairSpec::create(1.0, 3.0, 3.0, ramp, ramp.mirrored());
}

// Central difference of log p_t(x | z) from the noised density itself.
double fd_score(const CompactPairSpec& spec, std::optional<ClassLabel> z, const SchedulePoint& p,
                double x) {
  auto logp = [&](double y) {
    if (z) return std::log(noised_component_density(spec, *z, p, y));
    return std::log(0.5 * noised_component_density(spec, ClassLabel::Positive, p, y) +
                    0.5 * noised_component_density(spec, ClassLabel::Negative, p, y));
  };
  const double h = 1e-5 * std::max(1.0, p.b);
  return (logp(x + h) - logp(x - h)) / (2 * h);
}

}  // namespace

TEST_SUITE("scores") {

TEST_CASE("exact scores match the dense-grid oracle") {
  const auto golden = testing::load_json("golden_scores.json");
  const double T = golden["horizon"];
  const auto uniform = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  const auto ramp = MixtureSpec::create(ramp_pair());
  int checked = 0;
  for (const auto& row : golden["scores"]) {
    const auto& spec = row["density"] == "uniform" ? uniform : ramp;
    const auto p = at_time(row["t"].get<double>(), T);
    const double x = row["x"];
    CAPTURE(row.dump());
    const double sp = exact_score(spec, {p, x, ClassLabel::Positive});
    const double sn = exact_score(spec, {p, x, ClassLabel::Negative});
    const double su = exact_score(spec, {p, x, std::nullopt});
    CHECK(sp == doctest::Approx(row["score_pos"].get<double>()).epsilon(1e-6));
    CHECK(sn == doctest::Approx(row["score_neg"].get<double>()).epsilon(1e-6));
    CHECK(su == doctest::Approx(row["score_uncond"].get<double>()).epsilon(1e-6));
    const auto post = posterior(spec, p, x);
    CHECK(post.q_pos == doctest::Approx(row["q_pos"].get<double>()).epsilon(1e-6).scale(1e-12));
    ++checked;
  }
  CHECK(checked == 40);
}

TEST_CASE("posterior weights sum to one and scores combine") {
  const auto spec = MixtureSpec::create(ramp_pair());
  for (double t : {0.0, 5.0, 9.0, 9.9, 9.999}) {
    for (double x : {-3.5, -0.2, 0.0, 0.7, 2.5}) {
      const auto p = at_time(t);
      const auto post = posterior(spec, p, x);
      CHECK(post.q_pos + post.q_neg == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(post.q_pos >= 0.0);
      CHECK(post.mean_pos >= 1.0 - 1e-12);
      CHECK(post.mean_pos <= 3.0 + 1e-12);
      CHECK(post.mean_neg <= -1.0 + 1e-12);
      const double su = exact_score(spec, {p, x, std::nullopt});
      const double mix = post.q_pos * exact_score(spec, {p, x, ClassLabel::Positive}) +
                         post.q_neg * exact_score(spec, {p, x, ClassLabel::Negative});
      CHECK(su == doctest::Approx(mix).epsilon(1e-9).scale(1e-9));
    }
  }
}

TEST_CASE("scores are the gradient of the noised log density") {
  const auto c = ramp_pair();
  const auto spec = MixtureSpec::create(c);
  for (double t : {6.0, 9.0, 9.8}) {
    for (double x : {-1.3, 0.4, 1.9, 3.2}) {
      const auto p = at_time(t);
      CAPTURE(t);
      CAPTURE(x);
      CHECK(exact_score(spec, {p, x, ClassLabel::Positive}) ==
            doctest::Approx(fd_score(c, ClassLabel::Positive, p, x)).epsilon(1e-5));
      CHECK(exact_score(spec, {p, x, std::nullopt}) ==
            doctest::Approx(fd_score(c, std::nullopt, p, x)).epsilon(1e-5));
    }
  }
}

TEST_CASE("gaussian scores are closed form") {
  const auto g = GaussianPairSpec::create(1.5, 0.7);
  const auto spec = MixtureSpec::create(g);
  const auto p = at_time(9.3);
  const double sig = gaussian_width(p, g.sigma0);
  for (double x : {-2.0, 0.0, 0.8}) {
    const double sp = -(x - p.a * g.mu) / (sig * sig);
    CHECK(exact_score(spec, {p, x, ClassLabel::Positive}) == doctest::Approx(sp).epsilon(1e-14));
    const double lp = -0.5 * std::pow((x - p.a * g.mu) / sig, 2);
    const double ln = -0.5 * std::pow((x + p.a * g.mu) / sig, 2);
    const double qp = 1.0 / (1.0 + std::exp(ln - lp));
    CHECK(posterior(spec, p, x).q_pos == doctest::Approx(qp).epsilon(1e-13));
  }
}

TEST_CASE("scores are finite near the terminal time") {
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  for (double s : {1.0 - 1e-6, 1.0 - 1e-10, 1.0 - 1e-14}) {
    for (double x : {-5.0, 0.5, 1.0, 1.5, 2.0, 2.000001, 7.0}) {
      const auto p = at_s(s);
      const auto post = posterior(spec, p, x);
      CHECK(std::isfinite(post.mean_pos));
      CHECK(std::isfinite(post.q_neg));
      CHECK(std::isfinite(exact_score(spec, {p, x, ClassLabel::Positive})));
    }
  }
}

TEST_CASE("monte carlo scores agree with the exact field within their error") {
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  Rng rng(11);
  for (double t : {8.0, 9.5}) {
    for (double x : {-1.0, 0.5, 1.6}) {
      const auto p = at_time(t);
      const ScoreQuery q{p, x, ClassLabel::Positive};
      const auto est = mc_score(spec, q, 200000, rng);
      CHECK(std::abs(est.value - exact_score(spec, q)) <= 4.0 * est.std_error + 1e-12);
      CHECK(est.n == 200000);
    }
  }
  const MonteCarloScoreField field(spec, 5000, 3);
  const auto p = at_time(9.0);
  // Deterministic given the seed.
  const MonteCarloScoreField again(spec, 5000, 3);
  CHECK(field.score(p, 0.4, std::nullopt) == again.score(p, 0.4, std::nullopt));
  const auto post = field.posterior(p, 0.4);
  REQUIRE(post);
  CHECK(post->q_pos + post->q_neg == doctest::Approx(1.0));
}

TEST_CASE("degenerate monte carlo estimate is reported") {
  const std::vector<double> draws = {1.0, 1.5};
  const auto p = at_s(1.0 - 1e-12);
  CHECK_THROWS_AS(mc_score_from_draws(draws, p, 40.0), DegenerateEstimateError);
}

TEST_CASE("corrupted field replaces the tail by -x") {
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0));
  auto base = std::make_shared<ExactScoreField>(spec);
  const CorruptedScoreField field({2.0, base});
  const auto p = at_time(9.0);
  CHECK(field.score(p, 2.5, ClassLabel::Positive) == -2.5);
  CHECK(field.score(p, 2.5, std::nullopt) == -2.5);
  CHECK(field.score(p, 1.5, ClassLabel::Positive) == base->score(p, 1.5, ClassLabel::Positive));
  CHECK_THROWS(CorruptedScoreField({0.0, base}));
}

TEST_CASE("corruption error matches the high-precision oracle") {
  const auto golden = testing::load_json("golden_corruption.json");
  const double T = golden["horizon"];
  const auto spec = CompactPairSpec::uniform_pair(1.0, 2.0);
  for (const auto& row : golden["grid"]) {
    const double tau = row["t"], R = row["R"];
    const auto err = corruption_l2_error(spec, R, at_time(T - tau, T), 4000);
    CAPTURE(row.dump());
    CHECK(err.error_pos == doctest::Approx(row["error_pos"].get<double>()).epsilon(1e-6));
    CHECK(err.error_uncond >= 0.0);
    CHECK(std::isfinite(err.bound));
  }
}

}  // TEST_SUITE
