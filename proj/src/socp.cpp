#include "platelift/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace platelift {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int ConeDims::size() const {
  int n = l;
  for (int k : q) n += k;
  return n;
}

std::string to_string(SolverStatus status) {
  switch (status) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::PrimalInfeasible: return "primal_infeasible";
    case SolverStatus::DualInfeasible: return "dual_infeasible";
    case SolverStatus::NumericalFailure: return "numerical_failure";
    case SolverStatus::MaxIterations: return "max_iterations";
  }
  return "unknown";
}

double cone_margin(const VectorXd& u, const ConeDims& dims) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < dims.l; ++i) m = std::min(m, u[i]);
  int off = dims.l;
  for (int k : dims.q) {
    m = std::min(m, u[off] - u.segment(off + 1, k - 1).norm());
    off += k;
  }
  return m;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Jordan product u o v.
VectorXd jprod(const VectorXd& u, const VectorXd& v, const ConeDims& d) {
  VectorXd r(u.size());
  r.head(d.l) = u.head(d.l).cwiseProduct(v.head(d.l));
  int off = d.l;
  for (int k : d.q) {
    r[off] = u.segment(off, k).dot(v.segment(off, k));
    r.segment(off + 1, k - 1) = u[off] * v.segment(off + 1, k - 1) + v[off] * u.segment(off + 1, k - 1);
    off += k;
  }
  return r;
}

// Solves lambda o x = v.
VectorXd jdiv(const VectorXd& lambda, const VectorXd& v, const ConeDims& d) {
  VectorXd x(v.size());
  x.head(d.l) = v.head(d.l).cwiseQuotient(lambda.head(d.l));
  int off = d.l;
  for (int k : d.q) {
    const double l0 = lambda[off];
    const auto l1 = lambda.segment(off + 1, k - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * v[off] - l1.dot(v.segment(off + 1, k - 1))) / det;
    x[off] = x0;
    x.segment(off + 1, k - 1) = (v.segment(off + 1, k - 1) - x0 * l1) / l0;
    off += k;
  }
  return x;
}

VectorXd identity_element(const ConeDims& d) {
  VectorXd e = VectorXd::Zero(d.size());
  e.head(d.l).setOnes();
  int off = d.l;
  for (int k : d.q) {
    e[off] = 1.0;
    off += k;
  }
  return e;
}

// Shifts u into the interior of K when needed (initial point heuristic).
void shift_into_cone(VectorXd& u, const ConeDims& d) {
  const double margin = cone_margin(u, d);
  if (d.size() == 0) return;
  const double norm = std::max(1.0, u.norm());
  if (margin < 1e-8 * norm) u += (1.0 - margin) * identity_element(d);
}

double max_step(const VectorXd& u, const VectorXd& du, const ConeDims& d) {
  double alpha = kInf;
  for (int i = 0; i < d.l; ++i)
    if (du[i] < 0) alpha = std::min(alpha, -u[i] / du[i]);
  int off = d.l;
  for (int k : d.q) {
    const double u0 = u[off], d0 = du[off];
    const auto u1 = u.segment(off + 1, k - 1);
    const auto d1 = du.segment(off + 1, k - 1);
    const double a = d0 * d0 - d1.squaredNorm();
    const double b = u0 * d0 - u1.dot(d1);
    const double c = std::max(0.0, u0 * u0 - u1.squaredNorm());
    const double disc = b * b - a * c;
    if (a < 0 || (b < 0 && disc >= 0)) alpha = std::min(alpha, c / (-b + std::sqrt(std::max(0.0, disc))));
    if (d0 < 0) alpha = std::min(alpha, -u0 / d0);
    off += k;
  }
  return alpha;
}

struct Scaling {
  MatrixXd W, Winv;
  VectorXd lambda;
};

bool nt_scaling(const VectorXd& s, const VectorXd& z, const ConeDims& d, Scaling& out) {
  const int m = d.size();
  out.W = MatrixXd::Zero(m, m);
  out.Winv = MatrixXd::Zero(m, m);
  for (int i = 0; i < d.l; ++i) {
    if (!(s[i] > 0) || !(z[i] > 0)) return false;
    const double w = std::sqrt(s[i] / z[i]);
    out.W(i, i) = w;
    out.Winv(i, i) = 1.0 / w;
  }
  int off = d.l;
  for (int k : d.q) {
    const auto sb = s.segment(off, k);
    const auto zb = z.segment(off, k);
    const double sres = sb[0] * sb[0] - sb.tail(k - 1).squaredNorm();
    const double zres = zb[0] * zb[0] - zb.tail(k - 1).squaredNorm();
    if (!(sres > 0) || !(zres > 0) || sb[0] <= 0 || zb[0] <= 0) return false;
    const double sn = std::sqrt(sres), zn = std::sqrt(zres);
    const VectorXd sbar = sb / sn, zbar = zb / zn;
    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
    VectorXd w(k);
    w[0] = (sbar[0] + zbar[0]) / (2.0 * gamma);
    w.tail(k - 1) = (sbar.tail(k - 1) - zbar.tail(k - 1)) / (2.0 * gamma);
    const double eta = std::sqrt(sn / zn);
    MatrixXd Wb(k, k);
    Wb(0, 0) = w[0];
    Wb.block(0, 1, 1, k - 1) = w.tail(k - 1).transpose();
    Wb.block(1, 0, k - 1, 1) = w.tail(k - 1);
    Wb.block(1, 1, k - 1, k - 1) =
        MatrixXd::Identity(k - 1, k - 1) + w.tail(k - 1) * w.tail(k - 1).transpose() / (1.0 + w[0]);
    MatrixXd Wi = Wb;
    Wi.block(0, 1, 1, k - 1) *= -1.0;
    Wi.block(1, 0, k - 1, 1) *= -1.0;
    out.W.block(off, off, k, k) = eta * Wb;
    out.Winv.block(off, off, k, k) = Wi / eta;
    off += k;
  }
  out.lambda = out.W * z;
  return out.lambda.allFinite();
}

// Newton systems  [0 A' G'; A 0 0; G 0 -W'W] [dx; dy; dz] = [r1; r2; r3]
// with dz eliminated: [G' W^-2 G, A'; A, 0] [dx; dy] = [r1 + G' W^-2 r3; r2].
// Newton systems  [0 A' G'; A 0 0; G 0 -W'W] [dx; dy; dz] = [r1; r2; r3].
// Solved through the reduced system [G' W^-2 G, A'; A, 0] with dz
// eliminated; when refinement cannot reach full accuracy (badly scaled W
// near the boundary) the full system is factored instead.
class KktSolver {
 public:
  KktSolver(const MatrixXd& A, const MatrixXd& G) : A_(A), G_(G) {}

  void factor(const MatrixXd& W, const MatrixXd& Winv) {
    const int n = static_cast<int>(G_.cols()), p = static_cast<int>(A_.rows());
    W2_ = W * W;
    Winv2_ = Winv * Winv;
    const MatrixXd M = Winv * G_;
    K_ = MatrixXd::Zero(n + p, n + p);
    K_.topLeftCorner(n, n) = M.transpose() * M;
    K_.block(0, n, n, p) = A_.transpose();
    K_.block(n, 0, p, n) = A_;
    lu_.compute(K_);
    full_ready_ = false;
  }

  VectorXd solve(const VectorXd& rhs) {
    VectorXd x = reduced(rhs);
    const double scale = 1e-11 * std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
    for (int i = 0; i < 3; ++i) {
      const VectorXd r = rhs - apply(x);
      if (r.lpNorm<Eigen::Infinity>() <= scale) return x;
      x += reduced(r);
    }
    if ((rhs - apply(x)).lpNorm<Eigen::Infinity>() <= scale) return x;
    if (!full_ready_) {
      const int n = static_cast<int>(G_.cols()), p = static_cast<int>(A_.rows()), m = static_cast<int>(G_.rows());
      Kfull_ = MatrixXd::Zero(n + p + m, n + p + m);
      Kfull_.block(0, n, n, p) = A_.transpose();
      Kfull_.block(0, n + p, n, m) = G_.transpose();
      Kfull_.block(n, 0, p, n) = A_;
      Kfull_.block(n + p, 0, m, n) = G_;
      Kfull_.block(n + p, n + p, m, m) = -W2_;
      full_lu_.compute(Kfull_);
      full_ready_ = true;
    }
    x = full_lu_.solve(rhs);
    for (int i = 0; i < 2; ++i) x += full_lu_.solve(rhs - apply(x));
    return x;
  }

 private:
  VectorXd apply(const VectorXd& v) const {
    const int n = static_cast<int>(G_.cols()), p = static_cast<int>(A_.rows()), m = static_cast<int>(G_.rows());
    VectorXd r(n + p + m);
    r << A_.transpose() * v.segment(n, p) + G_.transpose() * v.tail(m), A_ * v.head(n),
        G_ * v.head(n) - W2_ * v.tail(m);
    return r;
  }

  VectorXd reduced(const VectorXd& rhs) const {
    const int n = static_cast<int>(G_.cols()), p = static_cast<int>(A_.rows()), m = static_cast<int>(G_.rows());
    const VectorXd r3 = rhs.tail(m);
    VectorXd red(n + p);
    red << rhs.head(n) + G_.transpose() * (Winv2_ * r3), rhs.segment(n, p);
    const VectorXd u = lu_.solve(red);
    VectorXd out(n + p + m);
    out << u, Winv2_ * (G_ * u.head(n) - r3);
    return out;
  }

  const MatrixXd& A_;
  const MatrixXd& G_;
  MatrixXd K_, W2_, Winv2_, Kfull_;
  Eigen::PartialPivLU<MatrixXd> lu_, full_lu_;
  bool full_ready_ = false;
};

}  // namespace

ConeSolution solve_cone_program(const ConeProgram& pr, const SolverSettings& st) {
  const int n = static_cast<int>(pr.c.size());
  const int m = static_cast<int>(pr.h.size());
  const ConeDims& d = pr.dims;
  if (pr.G.rows() != m || pr.G.cols() != n || d.size() != m)
    throw std::invalid_argument("cone program: inconsistent G/h/cone dimensions");
  if (pr.A.cols() != n && pr.A.rows() > 0) throw std::invalid_argument("cone program: A has wrong column count");
  if (pr.A.rows() != pr.b.size()) throw std::invalid_argument("cone program: A and b disagree");
  for (int k : d.q)
    if (k < 1) throw std::invalid_argument("cone program: empty second-order cone");

  ConeSolution out;
  const int p_full = static_cast<int>(pr.A.rows());

  // Drop dependent equality rows.
  MatrixXd A(0, n);
  VectorXd b(0);
  std::vector<int> kept_rows;
  if (p_full > 0) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(pr.A.transpose());
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());
    for (int i = 0; i < rank; ++i) kept_rows.push_back(qr.colsPermutation().indices()[i]);
    std::sort(kept_rows.begin(), kept_rows.end());
    A.resize(rank, n);
    b.resize(rank);
    for (int i = 0; i < rank; ++i) {
      A.row(i) = pr.A.row(kept_rows[i]);
      b[i] = pr.b[kept_rows[i]];
    }
    if (rank < p_full) {
      const VectorXd xls = pr.A.completeOrthogonalDecomposition().solve(pr.b);
      if ((pr.A * xls - pr.b).norm() > 1e-9 * (1.0 + pr.b.norm())) {
        out.status = SolverStatus::PrimalInfeasible;
        out.x = VectorXd::Zero(n);
        out.y = VectorXd::Zero(p_full);
        out.z = VectorXd::Zero(m);
        out.s = VectorXd::Zero(m);
        return out;
      }
    }
  }
  const int p = static_cast<int>(A.rows());
  const VectorXd& c = pr.c;
  const MatrixXd& G = pr.G;
  const VectorXd& h = pr.h;

  auto expand_y = [&](const VectorXd& y) {
    VectorXd full = VectorXd::Zero(p_full);
    for (int i = 0; i < p; ++i) full[kept_rows[i]] = y[i];
    return full;
  };

  KktSolver kkt(A, G);
  const VectorXd e = identity_element(d);

  // Initial point: least-norm s and z with W = I.
  kkt.factor(MatrixXd::Identity(m, m), MatrixXd::Identity(m, m));
  VectorXd rhs(n + p + m);
  rhs << VectorXd::Zero(n), b, h;
  VectorXd sol = kkt.solve(rhs);
  VectorXd x = sol.head(n);
  VectorXd s = -sol.tail(m);
  rhs << -c, VectorXd::Zero(p), VectorXd::Zero(m);
  sol = kkt.solve(rhs);
  VectorXd y = sol.segment(n, p);
  VectorXd z = sol.tail(m);
  shift_into_cone(s, d);
  shift_into_cone(z, d);
  if (m == 0 && !x.allFinite()) x.setZero();
  double tau = 1.0, kappa = 1.0;

  const double bnorm = std::max({1.0, b.size() ? b.norm() : 0.0, h.size() ? h.norm() : 0.0});
  const double cnorm = std::max(1.0, c.norm());

  auto fill_result = [&](SolverStatus status) {
    out.status = status;
    if (status == SolverStatus::Optimal || status == SolverStatus::MaxIterations ||
        status == SolverStatus::NumericalFailure) {
      out.x = x / tau;
      out.y = expand_y(y / tau);
      out.z = z / tau;
      out.s = s / tau;
      out.primal_objective = c.dot(out.x);
      out.dual_objective = -(b.dot(y) + h.dot(z)) / tau;
    } else {
      out.x = x;
      out.y = expand_y(y);
      out.z = z;
      out.s = s;
    }
    return out;
  };

  struct Residuals {
    double pres, dres, gap, relgap, pcost, dcost;
    double pinf, dinf;
    bool pinf_cert, dinf_cert;
  };
  auto evaluate = [&](VectorXd& rx, VectorXd& ry, VectorXd& rz, double& rt) {
    rx = A.transpose() * y + G.transpose() * z + c * tau;
    ry = -A * x + b * tau;
    rz = s + G * x - h * tau;
    rt = kappa + c.dot(x) + b.dot(y) + h.dot(z);
    Residuals r{};
    r.pres = std::max(ry.size() ? ry.norm() : 0.0, rz.size() ? rz.norm() : 0.0) / tau / bnorm;
    r.dres = rx.norm() / tau / cnorm;
    r.gap = s.dot(z) / (tau * tau);
    r.pcost = c.dot(x) / tau;
    r.dcost = -(b.dot(y) + h.dot(z)) / tau;
    r.relgap = kInf;
    if (r.pcost < 0)
      r.relgap = r.gap / -r.pcost;
    else if (r.dcost > 0)
      r.relgap = r.gap / r.dcost;
    const double hz = b.dot(y) + h.dot(z);
    r.pinf_cert = hz < 0;
    r.pinf = r.pinf_cert ? (A.transpose() * y + G.transpose() * z).norm() / -hz : kInf;
    const double cx = c.dot(x);
    r.dinf_cert = cx < 0;
    r.dinf = r.dinf_cert ? std::max(A.rows() ? (A * x).norm() : 0.0, (G * x + s).norm()) / -cx : kInf;
    return r;
  };

  VectorXd rx, ry, rz;
  double rt = 0.0;
  Residuals res{};
  for (int it = 0; it <= st.max_iterations; ++it) {
    out.iterations = it;
    res = evaluate(rx, ry, rz, rt);
    out.primal_residual = res.pres;
    out.dual_residual = res.dres;
    out.gap = res.gap;
    if (res.pres < st.feastol && res.dres < st.feastol && (res.gap < st.abstol || res.relgap < st.reltol))
      return fill_result(SolverStatus::Optimal);
    if (res.pinf_cert && res.pinf < st.feastol) return fill_result(SolverStatus::PrimalInfeasible);
    if (res.dinf_cert && res.dinf < st.feastol) return fill_result(SolverStatus::DualInfeasible);
    if (it == st.max_iterations) break;

    Scaling sc;
    if (!nt_scaling(s, z, d, sc)) break;
    const double mu = (s.dot(z) + tau * kappa) / (d.degree() + 1);
    kkt.factor(sc.W, sc.Winv);

    rhs << -c, b, h;
    const VectorXd d1 = kkt.solve(rhs);
    const VectorXd x1 = d1.head(n), y1 = d1.segment(n, p), z1 = d1.tail(m);
    const double denom = c.dot(x1) + b.dot(y1) + h.dot(z1) - kappa / tau;

    struct Dir {
      VectorXd dx, dy, dz, ds;
      double dtau, dkappa;
    };
    auto direction = [&](const VectorXd& dxr, const VectorXd& dyr, const VectorXd& dzr, double dtr,
                         const VectorXd& dsr, double dkr) {
      const VectorXd u = jdiv(sc.lambda, dsr, d);
      VectorXd r2(n + p + m);
      r2 << dxr, -dyr, dzr - sc.W * u;
      const VectorXd s2 = kkt.solve(r2);
      const VectorXd x2 = s2.head(n), y2 = s2.segment(n, p), z2 = s2.tail(m);
      Dir D;
      D.dtau = (dtr - dkr / tau - (c.dot(x2) + b.dot(y2) + h.dot(z2))) / denom;
      D.dx = x2 + D.dtau * x1;
      D.dy = y2 + D.dtau * y1;
      D.dz = z2 + D.dtau * z1;
      D.ds = sc.W * (u - sc.W * D.dz);
      D.dkappa = (dkr - kappa * D.dtau) / tau;
      return D;
    };
    auto step_length = [&](const Dir& D) {
      double a = std::min(max_step(s, D.ds, d), max_step(z, D.dz, d));
      if (D.dtau < 0) a = std::min(a, -tau / D.dtau);
      if (D.dkappa < 0) a = std::min(a, -kappa / D.dkappa);
      return a;
    };

    const VectorXd lam2 = jprod(sc.lambda, sc.lambda, d);
    const Dir aff = direction(-rx, -ry, -rz, -rt, -lam2, -tau * kappa);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 0.0, 1.0);

    const VectorXd corr = jprod(sc.Winv * aff.ds, sc.W * aff.dz, d);
    const double g = 1.0 - sigma;
    const Dir cmb = direction(-g * rx, -g * ry, -g * rz, -g * rt, -lam2 - corr + sigma * mu * e,
                              -tau * kappa - aff.dtau * aff.dkappa + sigma * mu);
    const double alpha = std::min(1.0, st.step_fraction * step_length(cmb));
    if (!(alpha > 1e-12) || !cmb.dx.allFinite()) break;
    x += alpha * cmb.dx;
    y += alpha * cmb.dy;
    z += alpha * cmb.dz;
    s += alpha * cmb.ds;
    tau += alpha * cmb.dtau;
    kappa += alpha * cmb.dkappa;
  }

  res = evaluate(rx, ry, rz, rt);
  if (res.pres < st.reduced_tol && res.dres < st.reduced_tol && (res.gap < st.reduced_tol || res.relgap < st.reduced_tol))
    return fill_result(SolverStatus::Optimal);
  if (res.pinf_cert && res.pinf < st.reduced_tol) return fill_result(SolverStatus::PrimalInfeasible);
  if (res.dinf_cert && res.dinf < st.reduced_tol) return fill_result(SolverStatus::DualInfeasible);
  return fill_result(out.iterations >= st.max_iterations ? SolverStatus::MaxIterations
                                                         : SolverStatus::NumericalFailure);
}

}  // namespace platelift
