// Regenerates tests/data/golden_scores.json. Independent of the library:
// long-double trapezoid sums on 10^6-node grids and a 10^6-step RK4.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <string>

#include <json.hpp>

using ld = long double;

namespace {

constexpr int kNodes = 1'000'000;
constexpr double kT = 10.0;

struct Density {
  std::string name;
  ld lo, hi;
  std::function<ld(ld)> f;
};

// Posterior mean of alpha given x under weight p(alpha) exp(-(x - a alpha)^2 / (2 b^2)).
ld posterior_mean(const Density& d, ld a, ld b2, ld x, ld* log_mass = nullptr) {
  const ld h = (d.hi - d.lo) / kNodes;
  ld peak = -INFINITY;
  for (int i = 0; i <= kNodes; ++i) {
    const ld al = d.lo + h * i;
    peak = std::max(peak, -(x - a * al) * (x - a * al) / (2 * b2));
  }
  ld m0 = 0, m1 = 0;
  for (int i = 0; i <= kNodes; ++i) {
    const ld al = d.lo + h * i;
    const ld wgt = (i == 0 || i == kNodes) ? 0.5L : 1.0L;
    const ld k = wgt * d.f(al) * std::exp(-(x - a * al) * (x - a * al) / (2 * b2) - peak);
    m0 += k;
    m1 += k * al;
  }
  if (log_mass) *log_mass = peak + std::log(m0 * h);
  return m1 / m0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string out = argc > 1 ? argv[1] : "golden_scores.json";
  const Density uniform{"uniform", 1, 2, [](ld) { return 1.0L; }};
  const Density ramp{"ramp", 1, 3, [](ld al) { return 0.25L + 0.25L * (al - 1); }};

  nlohmann::json points = nlohmann::json::array();
  const double taus[] = {0.05, 0.2, 0.7, 2.0};
  const double xs[] = {-1.7, 0.3, 1.4, 2.2, 3.1};
  int count = 0;
  for (const auto* d : {&uniform, &ramp}) {
    for (double tau : taus)
      for (double x : xs) {
        if (count >= 40) break;
        const ld a = std::exp(-static_cast<ld>(tau));
        const ld b2 = -std::expm1(-2 * static_cast<ld>(tau));
        Density neg{d->name, -d->hi, -d->lo, [f = d->f](ld al) { return f(-al); }};
        ld lp = 0, ln = 0;
        const ld mp = posterior_mean(*d, a, b2, x, &lp);
        const ld mn = posterior_mean(neg, a, b2, x, &ln);
        const ld qp = 1 / (1 + std::exp(ln - lp));
        const ld mu = qp * mp + (1 - qp) * mn;
        auto score = [&](ld m) { return (a * m - x) / b2; };
        points.push_back({{"density", d->name},
                          {"t", kT - tau},
                          {"x", x},
                          {"score_pos", static_cast<double>(score(mp))},
                          {"score_neg", static_cast<double>(score(mn))},
                          {"score_uncond", static_cast<double>(score(mu))},
                          {"q_pos", static_cast<double>(qp)}});
        ++count;
      }
  }

  // Tilted Gaussian: p(x) q(x)^{1+w} = N(x; 1, 1) q(x)^w / 2 with q = 1 / (1 + e^{-2x}), w = 5.
  const ld w = 5;
  const ld lo = -14, hi = 16, h = (hi - lo) / kNodes;
  auto tilted = [&](ld x) {
    return std::exp(-(x - 1) * (x - 1) / 2) * std::pow(1 + std::exp(-2 * x), -w);
  };
  ld z = 0;
  for (int i = 0; i <= kNodes; ++i) z += ((i == 0 || i == kNodes) ? 0.5L : 1.0L) * tilted(lo + h * i);
  z *= h;
  nlohmann::json tilted_table = nlohmann::json::array();
  for (double x : {-2.0, -1.0, 0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0})
    tilted_table.push_back({{"x", x}, {"density", static_cast<double>(tilted(x) / z)}});

  // Reduced Gaussian flow x' = (w+1) - w tanh(s x), w = 3, x(0) = 0.
  auto f = [](ld s, ld x) { return 4.0L - 3.0L * std::tanh(s * x); };
  ld x = 0;
  const int steps = 1'000'000;
  const ld hs = 1.0L / steps;
  for (int i = 0; i < steps; ++i) {
    const ld s = hs * i;
    const ld k1 = f(s, x), k2 = f(s + hs / 2, x + hs / 2 * k1), k3 = f(s + hs / 2, x + hs / 2 * k2),
             k4 = f(s + hs, x + hs * k3);
    x += hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }

  nlohmann::json doc = {{"horizon", kT},
                        {"scores", points},
                        {"tilted_gaussian_w5", tilted_table},
                        {"reduced_gaussian_w3_x0_0", static_cast<double>(x)}};
  std::ofstream(out) << doc.dump(2) << "\n";
  std::printf("wrote %s\n", out.c_str());
}
