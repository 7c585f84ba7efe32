#pragma once

#include <deque>
#include <random>

#include "tve/nonlinear_scheme.hpp"

namespace tvetest {

// Multistart L-BFGS descent on the mechanical objective, using only its value
// and gradient (no Hessian, no Newton). Returns the best minimizer found.
struct DescentResult {
  tve::VectorField y;
  double residual = 0;
  double value = 0;
  int starts_converged = 0;
  double spread = 0;  // max sup-norm distance between converged starts
};

inline DescentResult brute_force_descent(const tve::MechanicalProblem& P, const tve::VectorField& y0, int starts,
                                         double perturb, double tol, unsigned seed) {
  const auto& fr = P.free_dofs();
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0, 1);
  DescentResult best;
  best.value = INFINITY;
  std::vector<tve::VectorField> found;
  for (int s = 0; s < starts; ++s) {
    tve::VectorField y = y0;
    if (s > 0)
      for (int d : fr) y[d] += perturb * n(rng);
    if (!P.value(y).feasible) continue;
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;
    tve::VectorField g = P.gradient(y);
    auto restrict = [&](const tve::VectorField& v) {
      Eigen::VectorXd r(fr.size());
      for (size_t i = 0; i < fr.size(); ++i) r[i] = v[fr[i]];
      return r;
    };
    Eigen::VectorXd gf = restrict(g);
    double res = P.scaled_residual(g);
    for (int it = 0; it < 20000 && res > tol; ++it) {
      // two-loop recursion
      Eigen::VectorXd q = gf;
      std::vector<double> al(mem.size());
      for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
        al[i] = mem[i].first.dot(q) / mem[i].second.dot(mem[i].first);
        q -= al[i] * mem[i].second;
      }
      if (!mem.empty()) q *= mem.back().first.dot(mem.back().second) / mem.back().second.squaredNorm();
      else q *= 1e-3 / std::max(1e-300, gf.lpNorm<Eigen::Infinity>());
      for (size_t i = 0; i < mem.size(); ++i) {
        const double b = mem[i].second.dot(q) / mem[i].second.dot(mem[i].first);
        q += (al[i] - b) * mem[i].first;
      }
      Eigen::VectorXd d = -q;
      if (d.dot(gf) >= 0) {
        mem.clear();
        d = -gf * 1e-3 / std::max(1e-300, gf.lpNorm<Eigen::Infinity>());
      }
      const double f0 = P.value(y).value;
      double step = 1;
      tve::VectorField yt;
      Eigen::VectorXd gt;
      bool moved = false;
      for (int bt = 0; bt < 60; ++bt, step *= 0.5) {
        yt = y;
        for (size_t i = 0; i < fr.size(); ++i) yt[fr[i]] += step * d[i];
        const auto v = P.value(yt);
        if (!v.feasible) continue;
        const tve::VectorField gtt = P.gradient(yt);
        const bool armijo = v.value <= f0 + 1e-4 * step * d.dot(gf);
        // near convergence the value is flat to roundoff; accept gradient decrease
        const bool flat = v.value <= f0 + 1e-12 * std::abs(f0) && P.scaled_residual(gtt) < res;
        if (armijo || flat) {
          gt = restrict(gtt);
          g = gtt;
          moved = true;
          break;
        }
      }
      if (!moved) break;
      const Eigen::VectorXd sv = step * d, yv = gt - gf;
      if (sv.dot(yv) > 1e-300) {
        mem.emplace_back(sv, yv);
        if (mem.size() > 12) mem.pop_front();
      }
      y = yt;
      gf = gt;
      res = P.scaled_residual(g);
    }
    if (res > tol) continue;
    ++best.starts_converged;
    for (const auto& f : found) best.spread = std::max(best.spread, (f - y).lpNorm<Eigen::Infinity>());
    found.push_back(y);
    const double v = P.value(y).value;
    if (v < best.value) {
      best.value = v;
      best.y = y;
      best.residual = res;
    }
  }
  return best;
}

}  // namespace tvetest
