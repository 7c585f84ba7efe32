#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "tve/errors.hpp"
#include "tve/types.hpp"

namespace tve {

enum class Edge { Left, Right, Bottom, Top };

Edge parse_edge(const std::string& name);
const char* to_string(Edge e);

// One boundary segment between two neighbouring boundary nodes.
struct BoundarySegment {
  int n0 = 0, n1 = 0;
  Edge edge = Edge::Left;
  double length = 0.0;
  bool dirichlet = false;
  Vec2 midpoint = Vec2::Zero();
};

// Union stencil of one cell: for each touched node the coefficients of
// (d_x, d_y, d_xx, d_xy, d_yy) at the cell center.
struct CellStencil {
  std::vector<int> nodes;
  std::vector<std::array<double, 5>> coef;
};

struct QuadratureSet {
  std::vector<Vec2> bulk_points;
  std::vector<double> bulk_weights;
  std::vector<Vec2> boundary_points;
  std::vector<double> boundary_weights;
  std::vector<bool> boundary_neumann;
};

// Uniform nx x ny nodal grid on [0, Lx] x [0, Ly]. Node (i, j) has index
// j * nx + i, cell (i, j) has index j * (nx - 1) + i. First derivatives are
// taken at cell centers from the bilinear interpolant; second derivatives are
// nodal second differences (one-sided three-point at the boundary) averaged
// to the cell center, the mixed derivative uses the four cell corners.
class Grid {
 public:
  Grid(int nx, int ny, double Lx, double Ly, std::vector<Edge> dirichlet_edges);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double Lx() const { return Lx_; }
  double Ly() const { return Ly_; }
  double hx() const { return hx_; }
  double hy() const { return hy_; }
  int num_nodes() const { return nx_ * ny_; }
  int num_cells() const { return (nx_ - 1) * (ny_ - 1); }
  double cell_weight() const { return hx_ * hy_; }
  double area() const { return Lx_ * Ly_; }

  int node(int i, int j) const { return j * nx_ + i; }
  Vec2 position(int n) const { return {(n % nx_) * hx_, (n / nx_) * hy_}; }
  Vec2 cell_center(int c) const;
  std::array<int, 4> cell_nodes(int c) const;  // (i,j), (i+1,j), (i,j+1), (i+1,j+1)

  const std::vector<Edge>& dirichlet_edges() const { return dirichlet_edges_; }
  bool is_dirichlet(int n) const { return dirichlet_[n]; }
  const std::vector<BoundarySegment>& boundary() const { return boundary_; }
  const std::vector<CellStencil>& stencils() const { return stencils_; }

  // lumped nodal areas (sum over adjacent cells of hx hy / 4)
  const Eigen::VectorXd& nodal_weights() const { return nodal_w_; }
  // lumped boundary lengths over all of Gamma
  const Eigen::VectorXd& boundary_weights() const { return boundary_w_; }

  // operators from nodal scalars to cell-center values
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& op(int k) const { return ops_[k]; }

  QuadratureSet quadrature() const;

  // Gradients of the four bilinear shape functions (local order as in
  // cell_nodes) at the 2x2 Gauss points of a cell; each Gauss point carries
  // weight cell_weight() / 4. Used for the conduction stiffness.
  const std::array<Eigen::Matrix<double, 2, 4>, 4>& q1_gauss_gradients() const { return q1_grad_; }

  VectorField identity() const;
  std::vector<Mat2> gradient_at_quadrature(const VectorField& v) const;
  std::vector<Tensor3> second_gradient_at_quadrature(const VectorField& v) const;
  // same operators applied to a deformation through y - id, which keeps
  // F - I accurate when y is close to the identity
  std::vector<Mat2> deformation_gradient(const VectorField& y) const;
  std::vector<Tensor3> deformation_second_gradient(const VectorField& y) const;
  std::vector<Vec2> scalar_gradient_at_quadrature(const ScalarField& s) const;
  // cell-center average of the four corner values
  std::vector<double> cell_average(const ScalarField& s) const;

  double integrate_bulk(const std::vector<double>& values) const;
  // values given per boundary segment; only Neumann segments when neumann_only
  double integrate_boundary(const std::vector<double>& values, bool neumann_only) const;

  // y = id + eps u0; u0 must vanish on the Dirichlet part.
  VectorField initial_deformation(double eps, const VectorField& u0) const;
  void pin_dirichlet(VectorField& y) const;     // y = id on the Dirichlet nodes
  void zero_dirichlet(VectorField& v) const;    // v = 0 on the Dirichlet nodes
  void zero_dirichlet_scalar(ScalarField& s) const;

  void check_vector(const VectorField& v) const;
  void check_scalar(const ScalarField& s) const;

 private:
  void build_operators();

  int nx_, ny_;
  double Lx_, Ly_, hx_, hy_;
  std::vector<Edge> dirichlet_edges_;
  std::vector<bool> dirichlet_;
  std::vector<BoundarySegment> boundary_;
  std::vector<CellStencil> stencils_;
  Eigen::VectorXd nodal_w_, boundary_w_;
  std::array<Eigen::SparseMatrix<double, Eigen::RowMajor>, 5> ops_;
  std::array<Eigen::Matrix<double, 2, 4>, 4> q1_grad_;
};

// CSV snapshot: header i,j,x,y,val... with 17 significant digits.
void write_snapshot_csv(const std::string& path, const Grid& g, const Eigen::VectorXd& values, int components);
Eigen::VectorXd read_snapshot_csv(const std::string& path, const Grid& g, int components);

}  // namespace tve
