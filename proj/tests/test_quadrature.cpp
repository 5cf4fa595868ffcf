#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <stdexcept>

#include "gflow/quadrature.hpp"

using namespace gflow;

TEST_SUITE("quadrature") {

TEST_CASE("gauss-kronrod on smooth and peaked integrands") {
  auto poly = [](double x) { return std::array<double, 1>{x * x * x - 2 * x}; };
  CHECK(integrate_gk<1>(poly, 0.0, 2.0)[0] == doctest::Approx(0.0).scale(1.0));

  auto gauss = [](double x) {
    const double w = std::exp(-x * x / (2e-8));
    return std::array<double, 2>{w, x * x * w};
  };
  std::size_t used = 0;
  const auto v = integrate_gk<2>(gauss, -1e-3, 2e-3, {}, &used);
  const double sigma = 1e-4;
  CHECK(v[0] == doctest::Approx(std::sqrt(2 * M_PI) * sigma).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(std::sqrt(2 * M_PI) * sigma * sigma * sigma).epsilon(1e-10));
  CHECK(used < 4000);
}

TEST_CASE("gauss-kronrod reports an exhausted budget") {
  auto rough = [](double x) { return std::array<double, 1>{std::sin(1.0 / (x + 1e-9))}; };
  QuadratureOptions opt;
  opt.max_subdivisions = 10;
  CHECK_THROWS_AS(integrate_gk<1>(rough, 0.0, 1.0, opt), QuadratureError);
}

TEST_CASE("adaptive simpson") {
  CHECK(integrate_simpson([](double x) { return std::exp(x); }, 0.0, 1.0) ==
        doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  CHECK_THROWS_AS(integrate_simpson([](double x) { return std::sin(1.0 / (x + 1e-12)); }, 0.0,
                                    1.0, 1e-14, 1000),
                  QuadratureError);
}

}  // TEST_SUITE
