#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace platelift {

/// Cone K = R+^l x Q^{q[0]} x Q^{q[1]} x ... where Q^k is the second-order
/// cone {(u0, u1) in R x R^{k-1} : ||u1|| <= u0}.
struct ConeDims {
  int l = 0;
  std::vector<int> q;

  int size() const;
  int degree() const { return l + static_cast<int>(q.size()); }
};

/// minimize c'x  subject to  G x + s = h,  A x = b,  s in K.
struct ConeProgram {
  Eigen::VectorXd c;
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  ConeDims dims;
};

enum class SolverStatus { Optimal, PrimalInfeasible, DualInfeasible, NumericalFailure, MaxIterations };

std::string to_string(SolverStatus status);

struct SolverSettings {
  int max_iterations = 100;
  double feastol = 1e-9;
  double abstol = 1e-9;
  double reltol = 1e-9;
  /// Accepted when the iteration stalls with residuals below these.
  double reduced_tol = 1e-7;
  double step_fraction = 0.99;
};

struct ConeSolution {
  SolverStatus status = SolverStatus::NumericalFailure;
  Eigen::VectorXd x, y, z, s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

/// Primal-dual interior point method on the homogeneous self-dual
/// embedding, Nesterov-Todd scaling, Mehrotra predictor-corrector.
/// Dependent equality rows are removed beforehand; an inconsistent A x = b
/// is reported as primal infeasible.
ConeSolution solve_cone_program(const ConeProgram& problem, const SolverSettings& settings = {});

/// Smallest membership margin of u: u_i on the linear block and
/// u0 - ||u1|| on each second-order block. Negative means u is outside K.
double cone_margin(const Eigen::VectorXd& u, const ConeDims& dims);

}  // namespace platelift
