#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace gflow {

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  double abs_tol = 0.0;
  /// Relative to the integral of |f| over the whole range, per component.
  double rel_tol = 1e-12;
  std::size_t max_subdivisions = 4000;
};

namespace detail {

// 15-point Kronrod abscissae / weights with the embedded 7-point Gauss rule.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Panel {
  double a, b;
  std::array<double, N> value;
  std::array<double, N> error;
  std::array<double, N> abs_value;
};

template <std::size_t N, class F>
Panel<N> kronrod_panel(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  std::array<double, N> k{}, g{}, ab{};
  const auto fc = f(c);
  for (std::size_t j = 0; j < N; ++j) {
    k[j] = fc[j] * kKronrodWeights[7];
    g[j] = fc[j] * kGaussWeights[3];
    ab[j] = std::abs(k[j]);
  }
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const auto f1 = f(c - dx);
    const auto f2 = f(c + dx);
    for (std::size_t j = 0; j < N; ++j) {
      k[j] += kKronrodWeights[i] * (f1[j] + f2[j]);
      ab[j] += kKronrodWeights[i] * (std::abs(f1[j]) + std::abs(f2[j]));
      if (i % 2 == 1) g[j] += kGaussWeights[i / 2] * (f1[j] + f2[j]);
    }
  }
  Panel<N> p{a, b, {}, {}, {}};
  for (std::size_t j = 0; j < N; ++j) {
    p.value[j] = k[j] * h;
    p.error[j] = std::abs((k[j] - g[j]) * h);
    p.abs_value[j] = ab[j] * std::abs(h);
  }
  return p;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of a vector-valued
/// integrand sharing nodes across all N components. The panel with the
/// largest scaled error is bisected until every component meets its tolerance.
/// Throws QuadratureError when the subdivision budget is exhausted.
template <std::size_t N, class F>
std::array<double, N> integrate_gk(F&& f, double a, double b, const QuadratureOptions& opt = {},
                                   std::size_t* panels_used = nullptr) {
  using Panel = detail::Panel<N>;
  std::array<double, N> total{};
  if (a == b) return total;

  std::vector<Panel> panels;
  panels.push_back(detail::kronrod_panel<N>(f, a, b));

  auto sums = [&](std::array<double, N>& val, std::array<double, N>& err,
                  std::array<double, N>& absval) {
    val.fill(0.0); err.fill(0.0); absval.fill(0.0);
    for (const auto& p : panels) {
      for (std::size_t j = 0; j < N; ++j) {
        val[j] += p.value[j];
        err[j] += p.error[j];
        absval[j] += p.abs_value[j];
      }
    }
  };

  std::array<double, N> err{}, absval{};
  for (;;) {
    sums(total, err, absval);
    std::array<double, N> tol{};
    bool done = true;
    for (std::size_t j = 0; j < N; ++j) {
      tol[j] = std::max(opt.abs_tol, opt.rel_tol * absval[j]);
      if (err[j] > tol[j]) done = false;
    }
    if (done) break;
    if (panels.size() >= opt.max_subdivisions)
      throw QuadratureError("adaptive quadrature exceeded " +
                            std::to_string(opt.max_subdivisions) + " subdivisions");
    // Bisect the panel carrying the largest tolerance-scaled error.
    std::size_t worst = 0;
    double worst_score = -1.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      double score = 0.0;
      for (std::size_t j = 0; j < N; ++j)
        score = std::max(score, panels[i].error[j] / std::max(tol[j], 1e-300));
      if (score > worst_score) { worst_score = score; worst = i; }
    }
    const Panel p = panels[worst];
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) {
      // Panel cannot be split further in floating point; accept what we have.
      break;
    }
    panels[worst] = detail::kronrod_panel<N>(f, p.a, mid);
    panels.push_back(detail::kronrod_panel<N>(f, mid, p.b));
  }
  if (panels_used) *panels_used = panels.size();
  return total;
}

/// Adaptive Simpson with local Richardson error control. Used for scalar
/// normalization checks where integrands are cheap.
template <class F>
double integrate_simpson(F&& f, double a, double b, double tol = 1e-10,
                         std::size_t max_evaluations = 2'000'000) {
  std::size_t evals = 0;
  auto eval = [&](double x) {
    if (++evals > max_evaluations)
      throw QuadratureError("adaptive Simpson exceeded its evaluation budget");
    return f(x);
  };
  std::function<double(double, double, double, double, double, double, double, int)> step =
      [&](double lo, double hi, double flo, double fmid, double fhi, double whole, double eps,
          int depth) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = eval(lm), frm = eval(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return step(lo, mid, flo, flm, fmid, left, 0.5 * eps, depth - 1) +
           step(mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth - 1);
  };
  const double fa = eval(a), fb = eval(b), fm = eval(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return step(a, b, fa, fm, fb, whole, tol, 48);
}

}  // namespace gflow
