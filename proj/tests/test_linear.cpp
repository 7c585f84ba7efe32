#include <random>

#include "doctest.h"
#include "tve/linear_scheme.hpp"

using namespace tve;

namespace {

LoadingProgram generic_loads() {
  LoadingProgram p = LoadingProgram::zero();
  p.body_force = [](double t, const Vec2& x) { return Vec2(0.3 * t + 0.1 * x[1], -0.2 * x[0]); };
  p.traction = [](double t, const Vec2& x) { return Vec2(0.2 * x[1], 0.1 + t); };
  p.boundary_temperature = [](double t, const Vec2& x) { return 0.5 * t * (1 + x[0]); };
  return p;
}

LinearConfig lcfg(double alpha, double kappa = 1.0) {
  LinearConfig c;
  c.alpha = alpha;
  c.tau = 0.1;
  c.T = 0.4;
  c.kappa = kappa;
  return c;
}

VectorField random_u(const Grid& g, unsigned seed, double amp) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n(0, 1);
  VectorField u = VectorField::Zero(2 * g.num_nodes());
  for (int k = 0; k < g.num_nodes(); ++k)
    if (!g.is_dirichlet(k)) u.segment<2>(2 * k) = amp * Vec2(n(rng), n(rng));
  return u;
}

ScalarField random_mu(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  ScalarField m(g.num_nodes());
  for (int k = 0; k < g.num_nodes(); ++k) m[k] = u(rng);
  return m;
}

}  // namespace

TEST_CASE("linear scheme: zero data stays zero") {
  const Grid g(6, 6, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  for (double a : {1.0, 1.5, 2.0}) {
    const LinearScheme s(g, m.linearized_tensors(a), lcfg(a), LoadingProgram::zero());
    const LinearRun r = s.run_linear(VectorField::Zero(2 * g.num_nodes()), ScalarField::Zero(g.num_nodes()));
    REQUIRE(r.steps.size() == 5);
    for (const auto& st : r.steps) {
      CHECK(st.u.norm() == 0.0);
      CHECK(st.mu.norm() == 0.0);
    }
  }
}

TEST_CASE("linear scheme: displacement ignores temperature unless alpha = 1") {
  const Grid g(6, 6, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  const SlabLoads slab = timeslab_average(generic_loads(), g, 2, 0.1);
  const VectorField u = random_u(g, 1, 0.1);
  for (double a : {1.2, 1.5, 2.0}) {
    const LinearScheme s(g, m.linearized_tensors(a), lcfg(a), generic_loads());
    const VectorField u1 = s.linear_mechanical_step(LinearState{1, u, random_mu(g, 2)}, slab);
    const VectorField u2 = s.linear_mechanical_step(LinearState{1, u, random_mu(g, 3)}, slab);
    CHECK(u1 == u2);
  }
  const LinearScheme s1(g, m.linearized_tensors(1.0), lcfg(1.0), generic_loads());
  const VectorField u1 = s1.linear_mechanical_step(LinearState{1, u, random_mu(g, 2)}, slab);
  const VectorField u2 = s1.linear_mechanical_step(LinearState{1, u, random_mu(g, 3)}, slab);
  CHECK((u1 - u2).norm() > 1e-6);
}

TEST_CASE("linear mechanical step minimizes the incremental quadratic functional") {
  const Grid g(5, 5, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  const SlabLoads slab = timeslab_average(generic_loads(), g, 2, 0.1);
  for (double a : {1.0, 2.0}) {
    const LinearScheme s(g, m.linearized_tensors(a), lcfg(a), generic_loads());
    const LinearState prev{1, random_u(g, 4, 0.05), random_mu(g, 5)};
    const Mat2 B = s.tensors().B;
    const auto mu_c = g.cell_average(prev.mu);
    // functional assembled from the scheme's own energy forms
    auto phi = [&](const VectorField& u) {
      double c = 0;
      const auto G = g.gradient_at_quadrature(u);
      for (int k = 0; k < g.num_cells(); ++k) c += g.cell_weight() * mu_c[k] * (B.array() * G[k].array()).sum();
      return s.elastic_energy(u) + s.viscous_form(u - prev.u) / (2 * 0.1) + c - slab.load.dot(u);
    };
    std::vector<int> fr;
    for (int n = 0; n < g.num_nodes(); ++n)
      if (!g.is_dirichlet(n)) fr.insert(fr.end(), {2 * n, 2 * n + 1});
    const int nf = static_cast<int>(fr.size());
    const VectorField z = VectorField::Zero(2 * g.num_nodes());
    const double h = 1.0;  // exact for quadratics
    Eigen::VectorXd grad0(nf);
    Eigen::MatrixXd H(nf, nf);
    for (int i = 0; i < nf; ++i) {
      VectorField p = z, q = z;
      p[fr[i]] = h;
      q[fr[i]] = -h;
      grad0[i] = (phi(p) - phi(q)) / (2 * h);
      H(i, i) = (phi(p) - 2 * phi(z) + phi(q)) / (h * h);
    }
    for (int i = 0; i < nf; ++i)
      for (int j = i + 1; j < nf; ++j) {
        VectorField pp = z, pm = z, mp = z, mm = z;
        pp[fr[i]] = h, pp[fr[j]] = h;
        pm[fr[i]] = h, pm[fr[j]] = -h;
        mp[fr[i]] = -h, mp[fr[j]] = h;
        mm[fr[i]] = -h, mm[fr[j]] = -h;
        H(i, j) = H(j, i) = (phi(pp) - phi(pm) - phi(mp) + phi(mm)) / (4 * h * h);
      }
    const Eigen::VectorXd x = H.ldlt().solve(-grad0);
    const VectorField u = s.linear_mechanical_step(prev, slab);
    double err = 0;
    for (int i = 0; i < nf; ++i) err = std::max(err, std::abs(u[fr[i]] - x[i]));
    CHECK(err <= 1e-8 * std::max(1.0, x.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("linear heat equation without shear heating: cold boundary keeps mu = 0") {
  const Grid g(6, 6, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  LoadingProgram p = generic_loads();
  p.boundary_temperature = [](double, const Vec2&) { return 0.0; };
  const LinearScheme s(g, m.linearized_tensors(1.5), lcfg(1.5), p);
  const LinearRun r = s.run_linear(VectorField::Zero(2 * g.num_nodes()), ScalarField::Zero(g.num_nodes()));
  double umax = 0;
  for (const auto& st : r.steps) {
    CHECK(st.mu.norm() == 0.0);
    umax = std::max(umax, st.u.norm());
  }
  CHECK(umax > 0);
}

TEST_CASE("linear heat identity with shear heating and insulated boundary") {
  const Grid g(6, 6, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  const LinearScheme s(g, m.linearized_tensors(2.0), lcfg(2.0, 0.0), generic_loads());
  const LinearRun r = s.run_linear(VectorField::Zero(2 * g.num_nodes()), ScalarField::Zero(g.num_nodes()));
  const double cv = s.tensors().cV_bar;
  for (size_t k = 1; k < r.steps.size(); ++k) {
    // with CD_alpha = CD: cV (int mu^k - int mu^{k-1}) = tau int CD e(v) : e(v)
    const double dm = cv * g.nodal_weights().dot(r.steps[k].mu - r.steps[k - 1].mu);
    const double diss = 0.1 * s.viscous_form((r.steps[k].u - r.steps[k - 1].u) / 0.1);
    CHECK(dm == doctest::Approx(diss).epsilon(1e-10));
    CHECK(diss > 0);
  }
}

TEST_CASE("linear heat equation: maximum principle toward a constant boundary value") {
  const Grid g(9, 9, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  LoadingProgram p = LoadingProgram::zero();
  p.boundary_temperature = [](double, const Vec2&) { return 1.0; };
  LinearConfig c = lcfg(1.5, 5.0);
  c.T = 2.0;
  const LinearScheme s(g, m.linearized_tensors(1.5), c, p);
  const LinearRun r = s.run_linear(VectorField::Zero(2 * g.num_nodes()), ScalarField::Zero(g.num_nodes()));
  double prev_gap = 1.0;
  for (size_t k = 1; k < r.steps.size(); ++k) {
    CHECK(r.steps[k].mu.minCoeff() >= -1e-14);
    CHECK(r.steps[k].mu.maxCoeff() <= 1 + 1e-14);
    const double gap = 1.0 - r.steps[k].mu.minCoeff();
    CHECK(gap <= prev_gap + 1e-14);
    prev_gap = gap;
  }
  CHECK(prev_gap < 0.5);
}

TEST_CASE("linear heat equation at alpha = 1 does not see the displacement") {
  const Grid g(6, 6, 1, 1, {Edge::Left});
  const Material m{MaterialParams{}};
  const LinearScheme s(g, m.linearized_tensors(1.0), lcfg(1.0), generic_loads());
  const SlabLoads slab = timeslab_average(generic_loads(), g, 2, 0.1);
  const LinearState prev{1, random_u(g, 6, 0.05), random_mu(g, 7)};
  const ScalarField a = s.linear_thermal_step(prev, random_u(g, 8, 0.1), slab);
  const ScalarField b = s.linear_thermal_step(prev, random_u(g, 9, 0.2), slab);
  CHECK(a == b);
}

TEST_CASE("linear ledger and configuration") {
  CHECK(std::string(LinearRun::header()).rfind("k,t,", 0) == 0);
  LinearConfig c = lcfg(2.0);
  c.alpha = 0.5;
  CHECK_THROWS_AS(c.validate(), Error);
  c.alpha = 2;
  c.tau = 0.3;
  CHECK_THROWS_AS(c.num_steps(), Error);
}
