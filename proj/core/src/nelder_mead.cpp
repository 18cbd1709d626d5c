#include "glyco/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace glyco {

namespace {

struct Vertex {
  std::vector<double> x;
  double f;
};

double simplex_size(const std::vector<Vertex>& s) {
  double size = 0.0;
  for (std::size_t i = 1; i < s.size(); ++i)
    for (std::size_t k = 0; k < s[0].x.size(); ++k) size = std::max(size, std::abs(s[i].x[k] - s[0].x[k]));
  return size;
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  NelderMeadResult result;
  auto eval = [&](const std::vector<double>& x) {
    ++result.evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  if (n == 0) {
    result.value = eval(x0);
    result.x = std::move(x0);
    result.converged = true;
    return result;
  }

  std::vector<Vertex> s;
  s.reserve(n + 1);
  s.push_back({x0, eval(x0)});
  for (std::size_t i = 0; i < n; ++i) {
    auto x = x0;
    x[i] += options.initial_step;
    s.push_back({x, eval(x)});
  }

  auto order = [&] { std::stable_sort(s.begin(), s.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; }); };
  auto affine = [&](const std::vector<double>& c, const std::vector<double>& w, double t) {
    std::vector<double> y(n);
    for (std::size_t k = 0; k < n; ++k) y[k] = c[k] + t * (w[k] - c[k]);
    return y;
  };

  order();
  while (result.iterations < options.max_iterations) {
    if (simplex_size(s) < options.size_tolerance) {
      result.converged = true;
      break;
    }
    ++result.iterations;

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += s[i].x[k] / static_cast<double>(n);

    Vertex& worst = s[n];
    const auto xr = affine(centroid, worst.x, -1.0);
    const double fr = eval(xr);

    if (fr < s[0].f) {
      const auto xe = affine(centroid, worst.x, -2.0);
      const double fe = eval(xe);
      worst = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
    } else if (fr < s[n - 1].f) {
      worst = {xr, fr};
    } else {
      const bool outside = fr < worst.f;
      const auto xc = outside ? affine(centroid, worst.x, -0.5) : affine(centroid, worst.x, 0.5);
      const double fc = eval(xc);
      if (fc < std::min(fr, worst.f)) {
        worst = {xc, fc};
      } else {
        for (std::size_t i = 1; i <= n; ++i) {
          s[i].x = affine(s[0].x, s[i].x, 0.5);
          s[i].f = eval(s[i].x);
        }
      }
    }
    order();
  }
  if (!result.converged && simplex_size(s) < options.size_tolerance) result.converged = true;

  result.x = s[0].x;
  result.value = s[0].f;
  return result;
}

}  // namespace glyco
