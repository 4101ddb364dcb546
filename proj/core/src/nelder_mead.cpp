#include "sabr/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "sabr/errors.hpp"

namespace sabr {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Simplex {
  std::vector<Eigen::VectorXd> x;
  std::vector<double> f;
};

double eval(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isnan(v) ? kInf : v;
}

Simplex initial_simplex(const std::function<double(const Eigen::VectorXd&)>& f,
                        const Eigen::VectorXd& x0, double f0, const Eigen::VectorXd& steps) {
  const Eigen::Index n = x0.size();
  Simplex s;
  s.x.push_back(x0);
  s.f.push_back(f0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double h = steps[i];
    Eigen::VectorXd v = x0;
    double fv = kInf;
    // Near a constraint boundary try the opposite side and then shorter edges.
    for (int attempt = 0; attempt < 60 && !std::isfinite(fv); ++attempt) {
      v = x0;
      v[i] += (attempt % 2 == 0) ? h : -h;
      fv = eval(f, v);
      if (attempt % 2 == 1) h *= 0.5;
    }
    s.x.push_back(v);
    s.f.push_back(fv);
  }
  return s;
}

}  // namespace

NelderMeadResult nelder_mead_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                      const Eigen::VectorXd& start, const NelderMeadOptions& opts) {
  const Eigen::Index n = start.size();
  if (n == 0) throw InvalidInput("nelder_mead: empty start vector");
  const double f_start = eval(f, start);
  if (!std::isfinite(f_start)) throw InvalidInput("nelder_mead: objective is not finite at the start");

  Eigen::VectorXd steps = opts.initial_steps;
  if (steps.size() == 0) {
    steps.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      steps[i] = start[i] != 0.0 ? 0.05 * std::fabs(start[i]) : 1e-3;
    }
  } else if (steps.size() != n) {
    throw InvalidInput("nelder_mead: initial_steps has the wrong dimension");
  }

  NelderMeadResult result;
  result.x = start;
  result.value = f_start;
  int iterations = 0;

  for (int restart = 0; restart <= opts.max_restarts; ++restart) {
    Simplex s = initial_simplex(f, result.x, result.value, steps);
    std::vector<std::size_t> order(n + 1);
    bool converged = false;

    while (iterations < opts.max_iterations) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
      const std::size_t best = order.front();
      const std::size_t worst = order.back();
      const std::size_t second_worst = order[n - 1];

      double diameter = 0.0;
      for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
        diameter = std::max(diameter, (s.x[i] - s.x[best]).cwiseAbs().maxCoeff());
      }
      if (diameter <= opts.x_tolerance) {
        converged = true;
        break;
      }
      ++iterations;

      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
      for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) centroid += s.x[order[i]];
      centroid /= static_cast<double>(n);

      const Eigen::VectorXd xr = centroid + opts.reflection * (centroid - s.x[worst]);
      const double fr = eval(f, xr);

      if (fr < s.f[best]) {
        const Eigen::VectorXd xe = centroid + opts.expansion * (xr - centroid);
        const double fe = eval(f, xe);
        if (fe < fr) {
          s.x[worst] = xe;
          s.f[worst] = fe;
        } else {
          s.x[worst] = xr;
          s.f[worst] = fr;
        }
        continue;
      }
      if (fr < s.f[second_worst]) {
        s.x[worst] = xr;
        s.f[worst] = fr;
        continue;
      }

      bool accepted = false;
      if (fr < s.f[worst]) {
        const Eigen::VectorXd xc = centroid + opts.contraction * (xr - centroid);
        const double fc = eval(f, xc);
        if (fc <= fr) {
          s.x[worst] = xc;
          s.f[worst] = fc;
          accepted = true;
        }
      } else {
        const Eigen::VectorXd xc = centroid + opts.contraction * (s.x[worst] - centroid);
        const double fc = eval(f, xc);
        if (fc < s.f[worst]) {
          s.x[worst] = xc;
          s.f[worst] = fc;
          accepted = true;
        }
      }
      if (!accepted) {
        for (std::size_t i = 0; i <= static_cast<std::size_t>(n); ++i) {
          if (i == best) continue;
          s.x[i] = s.x[best] + opts.shrink * (s.x[i] - s.x[best]);
          s.f[i] = eval(f, s.x[i]);
        }
      }
    }

    const auto best_it = std::min_element(s.f.begin(), s.f.end());
    const double improvement = result.value - *best_it;
    if (*best_it < result.value) {
      result.value = *best_it;
      result.x = s.x[static_cast<std::size_t>(best_it - s.f.begin())];
    }
    result.restarts = restart;
    result.converged = converged;
    if (!converged || improvement <= opts.f_tolerance) break;
  }
  result.iterations = iterations;
  return result;
}

}  // namespace sabr
