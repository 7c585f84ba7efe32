#include "tve/loading.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace tve {

double TimeProfile::operator()(double t) const {
  switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return 1.0;
    case Kind::Ramp: return std::clamp(t / duration, 0.0, 1.0);
    case Kind::Sinusoid: return std::sin(2 * M_PI * t / duration);
    case Kind::Pulse: {
      if (t <= 0 || t >= duration) return 0.0;
      const double s = std::sin(M_PI * t / duration);
      return s * s;
    }
    case Kind::Table: {
      if (table.empty()) return 0.0;
      if (t <= table.front().first) return table.front().second;
      if (t >= table.back().first) return table.back().second;
      auto it = std::upper_bound(table.begin(), table.end(), t,
                                 [](double v, const auto& row) { return v < row.first; });
      const auto& [t1, v1] = *it;
      const auto& [t0, v0] = *(it - 1);
      return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
    }
  }
  return 0.0;
}

TimeProfile TimeProfile::parse(const std::string& name, double duration) {
  TimeProfile p;
  p.duration = duration;
  if (name == "zero") p.kind = Kind::Zero;
  else if (name == "constant") p.kind = Kind::Constant;
  else if (name == "ramp") p.kind = Kind::Ramp;
  else if (name == "sinusoid") p.kind = Kind::Sinusoid;
  else if (name == "pulse") p.kind = Kind::Pulse;
  else throw Error(ErrorCode::ConfigParseError, "unknown time profile '" + name + "'");
  if (!(duration > 0)) throw Error(ErrorCode::ConfigParseError, "profile duration must be positive");
  return p;
}

TimeProfile TimeProfile::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParseError, "cannot open load table " + path);
  TimeProfile p;
  p.kind = Kind::Table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ','))
      throw Error(ErrorCode::ConfigParseError, path + ":" + std::to_string(lineno) + ": expected t,value");
    try {
      p.table.emplace_back(std::stod(a), std::stod(b));
    } catch (const std::exception&) {
      if (lineno == 1) continue;  // header
      throw Error(ErrorCode::ConfigParseError, path + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  for (size_t i = 1; i < p.table.size(); ++i)
    if (!(p.table[i].first > p.table[i - 1].first))
      throw Error(ErrorCode::ConfigParseError, path + ": times must increase");
  return p;
}

std::string TimeProfile::name() const {
  switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Constant: return "constant";
    case Kind::Ramp: return "ramp";
    case Kind::Sinusoid: return "sinusoid";
    case Kind::Pulse: return "pulse";
    case Kind::Table: return "table";
  }
  return "zero";
}

LoadingProgram LoadingProgram::zero() {
  LoadingProgram p;
  p.body_force = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  p.traction = [](double, const Vec2&) { return Vec2::Zero().eval(); };
  p.boundary_temperature = [](double, const Vec2&) { return 0.0; };
  return p;
}

namespace {

bool carries_traction(const LoadingProgram& prog, const BoundarySegment& s) {
  if (s.dirichlet) return false;
  if (prog.traction_edges.empty()) return true;
  return std::find(prog.traction_edges.begin(), prog.traction_edges.end(), s.edge) != prog.traction_edges.end();
}

template <class Weights>
SlabLoads assemble(const LoadingProgram& prog, const Grid& g, const Weights& tw) {
  SlabLoads L;
  const int nc = g.num_cells();
  L.f_cells.assign(nc, Vec2::Zero());
  L.g_segments.assign(g.boundary().size(), Vec2::Zero());
  L.theta_flat = ScalarField::Zero(g.num_nodes());
  for (const auto& [t, w] : tw) {
    for (int c = 0; c < nc; ++c) L.f_cells[c] += w * prog.body_force(t, g.cell_center(c));
    for (size_t s = 0; s < g.boundary().size(); ++s)
      if (carries_traction(prog, g.boundary()[s])) L.g_segments[s] += w * prog.traction(t, g.boundary()[s].midpoint);
    for (int n = 0; n < g.num_nodes(); ++n)
      if (g.boundary_weights()[n] > 0) L.theta_flat[n] += w * prog.boundary_temperature(t, g.position(n));
  }
  L.load = VectorField::Zero(2 * g.num_nodes());
  double f2 = 0, g2 = 0;
  for (int c = 0; c < nc; ++c) {
    for (int n : g.cell_nodes(c)) L.load.segment<2>(2 * n) += 0.25 * g.cell_weight() * L.f_cells[c];
    f2 += g.cell_weight() * L.f_cells[c].squaredNorm();
  }
  for (size_t s = 0; s < g.boundary().size(); ++s) {
    const auto& seg = g.boundary()[s];
    L.load.segment<2>(2 * seg.n0) += 0.5 * seg.length * L.g_segments[s];
    L.load.segment<2>(2 * seg.n1) += 0.5 * seg.length * L.g_segments[s];
    g2 += seg.length * L.g_segments[s].squaredNorm();
  }
  L.f_l2 = std::sqrt(f2);
  L.g_l2 = std::sqrt(g2);
  return L;
}

}  // namespace

SlabLoads timeslab_average(const LoadingProgram& prog, const Grid& g, int k, double tau) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  std::vector<std::pair<double, double>> tw;
  const double t0 = (k - 1) * tau;
  for (int i = 0; i < 5; ++i) tw.emplace_back(t0 + 0.5 * tau * (1 + x[i]), 0.5 * w[i]);
  return assemble(prog, g, tw);
}

SlabLoads loads_at(const LoadingProgram& prog, const Grid& g, double t) {
  std::vector<std::pair<double, double>> tw{{t, 1.0}};
  return assemble(prog, g, tw);
}

}  // namespace tve
