#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <stdexcept>

#include "gflow/mixtures.hpp"

using namespace gflow;

TEST_SUITE("mixtures") {

TEST_CASE("uniform pair densities integrate to one and mirror") {
  const auto spec = CompactPairSpec::uniform_pair(1.0, 2.0);
  CHECK(spec.density_pos.integral() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spec.density_neg.integral() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spec.density_pos(1.5) == 1.0);
  CHECK(spec.density_pos(2.5) == 0.0);
  CHECK(spec.density_neg(-1.5) == 1.0);
  CHECK(spec.density_neg(1.5) == 0.0);
}

TEST_CASE("create names the violated invariant") {
  const auto u = PiecewisePolynomial::uniform(1.0, 2.0);
  auto message = [&](double a1, double a2, double beta) {
    try {
      CompactPairSpec::create(a1, a2, beta, u, u.mirrored());
    } catch (const std::invalid_argument& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message(0.0, 2.0, 1.0).find("alpha1") != std::string::npos);
  CHECK(message(2.0, 1.0, 1.0).find("alpha1 must be < alpha2") != std::string::npos);
  CHECK(message(1.0, 2.0, 0.5).find("beta") != std::string::npos);
  // Density not normalized.
  CHECK_THROWS_AS(CompactPairSpec::create(1.0, 2.0, 1.0,
                                          PiecewisePolynomial({1.0, 2.0}, {{2.0}}), u.mirrored()),
                  std::invalid_argument);
  // Density outside its support interval.
  CHECK_THROWS_AS(CompactPairSpec::create(1.0, 2.0, 1.0, PiecewisePolynomial::uniform(0.5, 1.5),
                                          u.mirrored()),
                  std::invalid_argument);
  CHECK_THROWS_AS(GaussianPairSpec::create(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("piecewise polynomial cdf and inverse agree") {
  const PiecewisePolynomial ramp({1.0, 3.0}, {{0.25, 0.25}});
  CHECK(ramp.integral() == doctest::Approx(1.0));
  for (double u : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
    const double x = ramp.inverse_cdf(u);
    CHECK(x >= 1.0);
    CHECK(x <= 3.0);
    CHECK(ramp.cdf(x) == doctest::Approx(u).epsilon(1e-12));
  }
  const PiecewisePolynomial cubic({0.0, 1.0, 2.0}, {{0.0, 0.0, 0.0, 2.0}, {0.5}});
  CHECK(cubic.integral() == doctest::Approx(1.0));
  for (double u : {0.05, 0.3, 0.49, 0.51, 0.8}) {
    CHECK(cubic.cdf(cubic.inverse_cdf(u)) == doctest::Approx(u).epsilon(1e-10));
  }
}

TEST_CASE("mirroring re-expands polynomial pieces") {
  const PiecewisePolynomial p({1.0, 2.0, 3.0}, {{0.1, 0.3, 0.2}, {0.6, -0.1}});
  const auto m = p.mirrored();
  for (double x : {1.0, 1.2, 1.7, 2.0, 2.4, 2.99}) CHECK(m(-x) == doctest::Approx(p(x)));
  CHECK(m.integral() == doctest::Approx(p.integral()));
}

TEST_CASE("beta bound check") {
  const auto ok = CompactPairSpec::uniform_pair(1.0, 2.0);
  CHECK(verify_beta_bound(ok, 64).holds);
  CHECK(verify_beta_bound(ok, 64).worst_ratio == doctest::Approx(1.0));

  const PiecewisePolynomial ramp({1.0, 3.0}, {{0.25, 0.25}});
  const auto skew = CompactPairSpec::create(1.0, 3.0, 1.5, ramp, PiecewisePolynomial::uniform(-3.0, -1.0));
  const auto check = verify_beta_bound(skew, 200);
  // max ratio: 0.75 / 0.5 = 1.5, min: 0.25 / 0.5 -> 2.
  CHECK_FALSE(check.holds);
  CHECK(check.worst_ratio == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("sampling stays in support and matches the mean") {
  const auto spec = MixtureSpec::create(CompactPairSpec::uniform_pair(1.0, 2.0), 1);
  Rng rng(5);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto x = sample(spec, ClassLabel::Positive, rng);
    REQUIRE(x.size() == 2);
    CHECK(x[0] >= 1.0);
    CHECK(x[0] <= 2.0);
    CHECK(std::abs(x[1]) <= 0.5);
    sum += x[0];
  }
  CHECK(sum / n == doctest::Approx(1.5).epsilon(0.01));

  const auto g = MixtureSpec::create(GaussianPairSpec::create(1.0, 1.0));
  double gs = 0.0;
  for (int i = 0; i < n; ++i) gs += sample_first(g, ClassLabel::Negative, rng);
  CHECK(gs / n == doctest::Approx(-1.0).epsilon(0.03));
}

TEST_CASE("mixture density is the average of the components") {
  const auto spec = MixtureSpec::create(GaussianPairSpec::create(1.0, 1.0));
  const double x = 0.3;
  const double expect = 0.5 * (std::exp(-0.5 * 0.49) + std::exp(-0.5 * 1.69)) / std::sqrt(2 * M_PI);
  CHECK(density(spec, x) == doctest::Approx(expect).epsilon(1e-14));
  const auto box = support_box(MixtureSpec::create(CompactPairSpec::uniform_pair(1, 2), 1),
                               ClassLabel::Negative);
  CHECK(box[0] == Interval{-2.0, -1.0});
  CHECK(box[1] == Interval{-0.5, 0.5});
}

TEST_CASE("json round trip and validation") {
  const PiecewisePolynomial ramp({1.0, 3.0}, {{0.25, 0.25}});
  const auto spec =
      MixtureSpec::create(CompactPairSpec::create(1.0, 3.0, 3.0, ramp, ramp.mirrored()), 1);
  const auto back = mixture_from_json(to_json(spec));
  CHECK(back == spec);

  const auto g = MixtureSpec::create(GaussianPairSpec::create(2.0, 0.5));
  CHECK(mixture_from_json(to_json(g)) == g);

  nlohmann::json minimal = {{"kind", "compact"}, {"alpha1", 1.0}, {"alpha2", 2.0}};
  CHECK(mixture_from_json(minimal) == MixtureSpec::create(CompactPairSpec::uniform_pair(1, 2)));

  nlohmann::json extra = minimal;
  extra["colour"] = "red";
  CHECK_THROWS_WITH_AS(mixture_from_json(extra), doctest::Contains("colour"), std::invalid_argument);
  nlohmann::json bad = minimal;
  bad["alpha1"] = 0.0;
  CHECK_THROWS_WITH_AS(mixture_from_json(bad), doctest::Contains("alpha1"), std::invalid_argument);
}

}  // TEST_SUITE
