#include "platelift/socp.hpp"

#include <doctest.h>

#include <random>

using namespace platelift;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ConeProgram empty_program(int n) {
  ConeProgram p;
  p.c = VectorXd::Zero(n);
  p.G = MatrixXd::Zero(0, n);
  p.h = VectorXd::Zero(0);
  p.A = MatrixXd::Zero(0, n);
  p.b = VectorXd::Zero(0);
  return p;
}

}  // namespace

TEST_CASE("small linear program") {
  auto p = empty_program(2);
  p.c << -1, -1;
  p.G.resize(4, 2);
  p.G << -1, 0, 0, -1, 1, 2, 3, 1;
  p.h.resize(4);
  p.h << 0, 0, 4, 6;
  p.dims.l = 4;
  const auto sol = solve_cone_program(p);
  REQUIRE(sol.status == SolverStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.6).epsilon(1e-7));
  CHECK(sol.x[1] == doctest::Approx(1.2).epsilon(1e-7));
  CHECK(sol.primal_objective == doctest::Approx(-2.8).epsilon(1e-7));
  CHECK(sol.dual_objective == doctest::Approx(-2.8).epsilon(1e-6));
}

TEST_CASE("distance from a point to a line") {
  // min t  s.t. ||(x1 - 1, x2 - 2)|| <= t, x1 + x2 = 0
  auto p = empty_program(3);
  p.c << 1, 0, 0;
  p.G = -MatrixXd::Identity(3, 3);
  p.h.resize(3);
  p.h << 0, -1, -2;
  p.dims.q = {3};
  p.A.resize(1, 3);
  p.A << 0, 1, 1;
  p.b.resize(1);
  p.b << 0;
  const auto sol = solve_cone_program(p);
  REQUIRE(sol.status == SolverStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(3.0 / std::sqrt(2.0)).epsilon(1e-7));
  CHECK(sol.x[1] == doctest::Approx(-0.5).epsilon(1e-6));
  CHECK(sol.x[2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("infeasible and unbounded problems") {
  SUBCASE("x >= 1 and x <= 0") {
    auto p = empty_program(1);
    p.c << 1;
    p.G.resize(2, 1);
    p.G << -1, 1;
    p.h.resize(2);
    p.h << -1, 0;
    p.dims.l = 2;
    CHECK(solve_cone_program(p).status == SolverStatus::PrimalInfeasible);
  }
  SUBCASE("inconsistent equalities") {
    auto p = empty_program(1);
    p.c << 1;
    p.A.resize(2, 1);
    p.A << 1, 1;
    p.b.resize(2);
    p.b << 1, 2;
    p.G.resize(1, 1);
    p.G << -1;
    p.h.resize(1);
    p.h << 0;
    p.dims.l = 1;
    CHECK(solve_cone_program(p).status == SolverStatus::PrimalInfeasible);
  }
  SUBCASE("unbounded below") {
    auto p = empty_program(1);
    p.c << -1;
    p.G.resize(1, 1);
    p.G << -1;
    p.h.resize(1);
    p.h << 0;
    p.dims.l = 1;
    CHECK(solve_cone_program(p).status == SolverStatus::DualInfeasible);
  }
  SUBCASE("cone constraint cannot hold") {
    // ||x|| <= -1
    auto p = empty_program(2);
    p.G.resize(3, 2);
    p.G << 0, 0, -1, 0, 0, -1;
    p.h.resize(3);
    p.h << -1, 0, 0;
    p.dims.q = {3};
    CHECK(solve_cone_program(p).status == SolverStatus::PrimalInfeasible);
  }
}

TEST_CASE("redundant equality rows are tolerated") {
  auto p = empty_program(2);
  p.c << 1, 2;
  p.A.resize(3, 2);
  p.A << 1, 1, 2, 2, 1, 1;
  p.b.resize(3);
  p.b << 1, 2, 1;
  p.G = -MatrixXd::Identity(2, 2);
  p.h = VectorXd::Zero(2);
  p.dims.l = 2;
  const auto sol = solve_cone_program(p);
  REQUIRE(sol.status == SolverStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(sol.x[1]) < 1e-7);
}

TEST_CASE("linear objective over a ball") {
  // min c'x s.t. ||x|| <= 1 has value -||c|| at x = -c/||c||
  std::mt19937_64 rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const int dim = 2 + t % 6;
    auto p = empty_program(dim);
    for (int i = 0; i < dim; ++i) p.c[i] = n(rng);
    p.G = MatrixXd::Zero(dim + 1, dim);
    p.G.bottomRows(dim) = -MatrixXd::Identity(dim, dim);
    p.h = VectorXd::Zero(dim + 1);
    p.h[0] = 1.0;
    p.dims.q = {dim + 1};
    const auto sol = solve_cone_program(p);
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(sol.primal_objective == doctest::Approx(-p.c.norm()).epsilon(1e-7));
    CHECK((sol.x + p.c / p.c.norm()).norm() < 1e-6);
  }
}

TEST_CASE("optimality conditions on random feasible programs") {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const int dim = 3 + t % 4;
    ConeDims dims;
    dims.l = 2 + t % 3;
    dims.q = {3, 4};
    const int m = dims.size();
    MatrixXd G(m, dim);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k < dim; ++k) G(i, k) = n(rng);
    // strictly feasible point x0 = 0 with slack inside the cone
    VectorXd s0 = VectorXd::Zero(m);
    for (int i = 0; i < dims.l; ++i) s0[i] = 1.0 + std::abs(n(rng));
    s0[dims.l] = 2.0;
    s0[dims.l + 3] = 2.0;
    // bounded: keep a dual point inside the cone so c = -G'z0
    VectorXd z0 = s0;
    ConeProgram p;
    p.G = G;
    p.h = s0;
    p.c = -G.transpose() * z0;
    p.A = MatrixXd::Zero(0, dim);
    p.b = VectorXd::Zero(0);
    p.dims = dims;
    const auto sol = solve_cone_program(p);
    REQUIRE(sol.status == SolverStatus::Optimal);
    CHECK(cone_margin(sol.s, dims) >= -1e-9);
    CHECK(cone_margin(sol.z, dims) >= -1e-9);
    CHECK((G * sol.x + sol.s - p.h).norm() < 1e-7);
    CHECK((p.c + G.transpose() * sol.z).norm() < 1e-7);
    CHECK(std::abs(sol.s.dot(sol.z)) < 1e-6);
    CHECK(sol.primal_objective == doctest::Approx(sol.dual_objective).epsilon(1e-6));
  }
}

TEST_CASE("cone margin") {
  ConeDims dims;
  dims.l = 1;
  dims.q = {3};
  CHECK(dims.size() == 4);
  CHECK(dims.degree() == 2);
  VectorXd u(4);
  u << 2, 5, 3, 4;
  CHECK(cone_margin(u, dims) == doctest::Approx(0.0));
  u << -1, 6, 3, 4;
  CHECK(cone_margin(u, dims) == doctest::Approx(-1.0));
  u << 2, 4, 3, 4;
  CHECK(cone_margin(u, dims) == doctest::Approx(-1.0));
}
