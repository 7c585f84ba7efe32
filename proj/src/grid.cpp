#include "tve/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace tve {

Edge parse_edge(const std::string& name) {
  if (name == "left") return Edge::Left;
  if (name == "right") return Edge::Right;
  if (name == "bottom") return Edge::Bottom;
  if (name == "top") return Edge::Top;
  throw Error(ErrorCode::ConfigParseError, "unknown edge '" + name + "'");
}

const char* to_string(Edge e) {
  switch (e) {
    case Edge::Left: return "left";
    case Edge::Right: return "right";
    case Edge::Bottom: return "bottom";
    case Edge::Top: return "top";
  }
  return "?";
}

Grid::Grid(int nx, int ny, double Lx, double Ly, std::vector<Edge> dirichlet_edges)
    : nx_(nx), ny_(ny), Lx_(Lx), Ly_(Ly), dirichlet_edges_(std::move(dirichlet_edges)) {
  if (nx < 3 || ny < 3) throw Error(ErrorCode::GridTooSmall, "need nx, ny >= 3");
  if (!(Lx > 0 && Ly > 0)) throw Error(ErrorCode::ShapeMismatch, "domain lengths must be positive");
  hx_ = Lx / (nx - 1);
  hy_ = Ly / (ny - 1);
  auto has = [&](Edge e) {
    return std::find(dirichlet_edges_.begin(), dirichlet_edges_.end(), e) != dirichlet_edges_.end();
  };
  if (dirichlet_edges_.empty()) throw Error(ErrorCode::InvariantFailure, "Dirichlet part is empty");
  if (has(Edge::Left) && has(Edge::Right) && has(Edge::Bottom) && has(Edge::Top))
    throw Error(ErrorCode::InvariantFailure, "Neumann part is empty");

  dirichlet_.assign(num_nodes(), false);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const bool d = (i == 0 && has(Edge::Left)) || (i == nx - 1 && has(Edge::Right)) ||
                     (j == 0 && has(Edge::Bottom)) || (j == ny - 1 && has(Edge::Top));
      dirichlet_[node(i, j)] = d;
    }

  auto add_seg = [&](int a, int b, Edge e, double len) {
    BoundarySegment s;
    s.n0 = a;
    s.n1 = b;
    s.edge = e;
    s.length = len;
    s.dirichlet = has(e);
    s.midpoint = 0.5 * (position(a) + position(b));
    boundary_.push_back(s);
  };
  for (int i = 0; i + 1 < nx; ++i) add_seg(node(i, 0), node(i + 1, 0), Edge::Bottom, hx_);
  for (int j = 0; j + 1 < ny; ++j) add_seg(node(nx - 1, j), node(nx - 1, j + 1), Edge::Right, hy_);
  for (int i = 0; i + 1 < nx; ++i) add_seg(node(i, ny - 1), node(i + 1, ny - 1), Edge::Top, hx_);
  for (int j = 0; j + 1 < ny; ++j) add_seg(node(0, j), node(0, j + 1), Edge::Left, hy_);

  nodal_w_ = Eigen::VectorXd::Zero(num_nodes());
  for (int c = 0; c < num_cells(); ++c)
    for (int n : cell_nodes(c)) nodal_w_[n] += 0.25 * cell_weight();
  boundary_w_ = Eigen::VectorXd::Zero(num_nodes());
  for (const auto& s : boundary_) {
    boundary_w_[s.n0] += 0.5 * s.length;
    boundary_w_[s.n1] += 0.5 * s.length;
  }
  build_operators();

  const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double xi = gp[a], et = gp[b];
      auto& G = q1_grad_[2 * b + a];
      G << -(1 - et) / hx_, (1 - et) / hx_, -et / hx_, et / hx_,
           -(1 - xi) / hy_, -xi / hy_, (1 - xi) / hy_, xi / hy_;
    }
}

Vec2 Grid::cell_center(int c) const {
  const int i = c % (nx_ - 1), j = c / (nx_ - 1);
  return {(i + 0.5) * hx_, (j + 0.5) * hy_};
}

std::array<int, 4> Grid::cell_nodes(int c) const {
  const int i = c % (nx_ - 1), j = c / (nx_ - 1);
  return {node(i, j), node(i + 1, j), node(i, j + 1), node(i + 1, j + 1)};
}

namespace {
// three-point second difference at index i of n points, one-sided at the ends
std::array<std::pair<int, double>, 3> second_difference(int i, int n) {
  const int m = std::clamp(i, 1, n - 2);
  return {{{m - 1, 1.0}, {m, -2.0}, {m + 1, 1.0}}};
}
}  // namespace

void Grid::build_operators() {
  const int ncell = num_cells();
  stencils_.resize(ncell);
  std::array<std::vector<Eigen::Triplet<double>>, 5> trip;
  for (int c = 0; c < ncell; ++c) {
    const int i = c % (nx_ - 1), j = c / (nx_ - 1);
    std::map<int, std::array<double, 5>> acc;
    auto add = [&](int n, int k, double v) {
      auto it = acc.try_emplace(n, std::array<double, 5>{0, 0, 0, 0, 0}).first;
      it->second[k] += v;
    };
    const int n00 = node(i, j), n10 = node(i + 1, j), n01 = node(i, j + 1), n11 = node(i + 1, j + 1);
    add(n00, 0, -0.5 / hx_);
    add(n10, 0, 0.5 / hx_);
    add(n01, 0, -0.5 / hx_);
    add(n11, 0, 0.5 / hx_);
    add(n00, 1, -0.5 / hy_);
    add(n10, 1, -0.5 / hy_);
    add(n01, 1, 0.5 / hy_);
    add(n11, 1, 0.5 / hy_);
    for (int di = 0; di < 2; ++di)
      for (int dj = 0; dj < 2; ++dj) {
        for (auto [ii, w] : second_difference(i + di, nx_)) add(node(ii, j + dj), 2, 0.25 * w / (hx_ * hx_));
        for (auto [jj, w] : second_difference(j + dj, ny_)) add(node(i + di, jj), 4, 0.25 * w / (hy_ * hy_));
      }
    const double m = 1.0 / (hx_ * hy_);
    add(n00, 3, m);
    add(n10, 3, -m);
    add(n01, 3, -m);
    add(n11, 3, m);
    CellStencil& st = stencils_[c];
    for (const auto& [n, cf] : acc) {
      st.nodes.push_back(n);
      st.coef.push_back(cf);
      for (int k = 0; k < 5; ++k)
        if (cf[k] != 0) trip[k].emplace_back(c, n, cf[k]);
    }
  }
  for (int k = 0; k < 5; ++k) {
    ops_[k].resize(ncell, num_nodes());
    ops_[k].setFromTriplets(trip[k].begin(), trip[k].end());
  }
}

QuadratureSet Grid::quadrature() const {
  QuadratureSet q;
  for (int c = 0; c < num_cells(); ++c) {
    q.bulk_points.push_back(cell_center(c));
    q.bulk_weights.push_back(cell_weight());
  }
  for (const auto& s : boundary_) {
    q.boundary_points.push_back(s.midpoint);
    q.boundary_weights.push_back(s.length);
    q.boundary_neumann.push_back(!s.dirichlet);
  }
  return q;
}

void Grid::check_vector(const VectorField& v) const {
  if (v.size() != 2 * num_nodes()) throw Error(ErrorCode::ShapeMismatch, "vector field has wrong length");
}

void Grid::check_scalar(const ScalarField& s) const {
  if (s.size() != num_nodes()) throw Error(ErrorCode::ShapeMismatch, "scalar field has wrong length");
}

VectorField Grid::identity() const {
  VectorField y(2 * num_nodes());
  for (int n = 0; n < num_nodes(); ++n) y.segment<2>(2 * n) = position(n);
  return y;
}

std::vector<Mat2> Grid::gradient_at_quadrature(const VectorField& v) const {
  check_vector(v);
  std::vector<Mat2> out(num_cells(), Mat2::Zero());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& st = stencils_[c];
    Mat2& F = out[c];
    for (size_t k = 0; k < st.nodes.size(); ++k) {
      const int n = st.nodes[k];
      for (int a = 0; a < 2; ++a) {
        F(a, 0) += st.coef[k][0] * v[2 * n + a];
        F(a, 1) += st.coef[k][1] * v[2 * n + a];
      }
    }
  }
  return out;
}

std::vector<Tensor3> Grid::second_gradient_at_quadrature(const VectorField& v) const {
  check_vector(v);
  std::vector<Tensor3> out(num_cells());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& st = stencils_[c];
    Tensor3& G = out[c];
    for (size_t k = 0; k < st.nodes.size(); ++k) {
      const int n = st.nodes[k];
      for (int a = 0; a < 2; ++a) {
        const double x = v[2 * n + a];
        G(a, 0, 0) += st.coef[k][2] * x;
        G(a, 0, 1) += st.coef[k][3] * x;
        G(a, 1, 1) += st.coef[k][4] * x;
      }
    }
    for (int a = 0; a < 2; ++a) G(a, 1, 0) = G(a, 0, 1);
  }
  return out;
}

std::vector<Mat2> Grid::deformation_gradient(const VectorField& y) const {
  check_vector(y);
  auto F = gradient_at_quadrature(y - identity());
  for (Mat2& f : F) f += Mat2::Identity();
  return F;
}

std::vector<Tensor3> Grid::deformation_second_gradient(const VectorField& y) const {
  check_vector(y);
  return second_gradient_at_quadrature(y - identity());
}

std::vector<Vec2> Grid::scalar_gradient_at_quadrature(const ScalarField& s) const {
  check_scalar(s);
  std::vector<Vec2> out(num_cells(), Vec2::Zero());
  for (int c = 0; c < num_cells(); ++c) {
    const auto& st = stencils_[c];
    for (size_t k = 0; k < st.nodes.size(); ++k) {
      out[c][0] += st.coef[k][0] * s[st.nodes[k]];
      out[c][1] += st.coef[k][1] * s[st.nodes[k]];
    }
  }
  return out;
}

std::vector<double> Grid::cell_average(const ScalarField& s) const {
  check_scalar(s);
  std::vector<double> out(num_cells());
  for (int c = 0; c < num_cells(); ++c) {
    double sum = 0;
    for (int n : cell_nodes(c)) sum += s[n];
    out[c] = 0.25 * sum;
  }
  return out;
}

double Grid::integrate_bulk(const std::vector<double>& values) const {
  if (static_cast<int>(values.size()) != num_cells()) throw Error(ErrorCode::ShapeMismatch, "bulk values");
  double s = 0;
  for (double v : values) s += v;
  return s * cell_weight();
}

double Grid::integrate_boundary(const std::vector<double>& values, bool neumann_only) const {
  if (values.size() != boundary_.size()) throw Error(ErrorCode::ShapeMismatch, "boundary values");
  double s = 0;
  for (size_t i = 0; i < boundary_.size(); ++i)
    if (!neumann_only || !boundary_[i].dirichlet) s += values[i] * boundary_[i].length;
  return s;
}

VectorField Grid::initial_deformation(double eps, const VectorField& u0) const {
  check_vector(u0);
  for (int n = 0; n < num_nodes(); ++n)
    if (dirichlet_[n] && u0.segment<2>(2 * n).norm() != 0)
      throw Error(ErrorCode::InvalidInitialDatum, "initial displacement does not vanish on the Dirichlet part");
  VectorField y = identity() + eps * u0;
  pin_dirichlet(y);
  return y;
}

void Grid::pin_dirichlet(VectorField& y) const {
  check_vector(y);
  for (int n = 0; n < num_nodes(); ++n)
    if (dirichlet_[n]) y.segment<2>(2 * n) = position(n);
}

void Grid::zero_dirichlet(VectorField& v) const {
  check_vector(v);
  for (int n = 0; n < num_nodes(); ++n)
    if (dirichlet_[n]) v.segment<2>(2 * n).setZero();
}

void Grid::zero_dirichlet_scalar(ScalarField& s) const {
  check_scalar(s);
  for (int n = 0; n < num_nodes(); ++n)
    if (dirichlet_[n]) s[n] = 0;
}

void write_snapshot_csv(const std::string& path, const Grid& g, const Eigen::VectorXd& values, int components) {
  if (values.size() != components * g.num_nodes()) throw Error(ErrorCode::ShapeMismatch, "snapshot size");
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw Error(ErrorCode::ConfigParseError, "cannot write " + path);
  std::fprintf(f, "i,j,x,y");
  for (int k = 0; k < components; ++k) std::fprintf(f, components == 1 ? ",val" : ",val%d", k);
  std::fprintf(f, "\n");
  for (int j = 0; j < g.ny(); ++j)
    for (int i = 0; i < g.nx(); ++i) {
      const int n = g.node(i, j);
      const Vec2 x = g.position(n);
      std::fprintf(f, "%d,%d,%.17g,%.17g", i, j, x[0], x[1]);
      for (int k = 0; k < components; ++k) std::fprintf(f, ",%.17g", values[components * n + k]);
      std::fprintf(f, "\n");
    }
  std::fclose(f);
}

Eigen::VectorXd read_snapshot_csv(const std::string& path, const Grid& g, int components) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigParseError, "cannot open snapshot " + path);
  std::string line;
  std::getline(in, line);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(components * g.num_nodes());
  std::vector<bool> seen(g.num_nodes(), false);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> vals;
    while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
    if (static_cast<int>(vals.size()) != 4 + components)
      throw Error(ErrorCode::ShapeMismatch, path + ":" + std::to_string(lineno) + ": wrong column count");
    const int i = static_cast<int>(vals[0]), j = static_cast<int>(vals[1]);
    if (i < 0 || j < 0 || i >= g.nx() || j >= g.ny())
      throw Error(ErrorCode::ShapeMismatch, path + ":" + std::to_string(lineno) + ": node outside grid");
    const int n = g.node(i, j);
    seen[n] = true;
    for (int k = 0; k < components; ++k) out[components * n + k] = vals[4 + k];
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw Error(ErrorCode::ShapeMismatch, path + ": snapshot does not cover the grid");
  return out;
}

}  // namespace tve
