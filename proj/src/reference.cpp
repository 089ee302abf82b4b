#include "mazo/reference.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "mazo/errors.hpp"

namespace mazo {

namespace {

struct KktWorkspace {
  const ProblemInstance& inst;
  const QuadraticSpec& spec;
  Eigen::MatrixXd a_avg;
  Eigen::VectorXd b_avg;
  double c_avg = 0.0;
  double lam_max_a = 0.0, lam_min_a = 0.0;
  std::vector<std::vector<double>> lam_max_p;  // [agent][constraint]

  explicit KktWorkspace(const ProblemInstance& instance)
      : inst(instance), spec(*instance.quad) {
    a_avg = spec.average_a();
    b_avg = spec.average_b();
    c_avg = spec.average_c();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_avg,
                                                      Eigen::EigenvaluesOnly);
    lam_min_a = es.eigenvalues().minCoeff();
    lam_max_a = es.eigenvalues().maxCoeff();
    lam_max_p.resize(inst.n);
    for (int i = 0; i < inst.n; ++i)
      for (int j = 0; j < inst.m; ++j) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ep(
            spec.P[i][j], Eigen::EigenvaluesOnly);
        lam_max_p[i].push_back(ep.eigenvalues().maxCoeff());
      }
  }

  double f0(const Eigen::VectorXd& x) const {
    return x.dot(a_avg * x) + b_avg.dot(x) + c_avg;
  }

  // grad_x of f0(x) + <y, sum_i g_i(x^i)>
  void lagrangian_grad(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       Eigen::VectorXd& grad) const {
    grad.noalias() = 2.0 * (a_avg * x);
    grad += b_avg;
    for (int i = 0; i < inst.n; ++i) {
      auto seg = grad.segment(inst.offsets[i], inst.dims[i]);
      auto xi = x.segment(inst.offsets[i], inst.dims[i]);
      for (int j = 0; j < inst.m; ++j)
        seg += y[j] * (2.0 * (spec.P[i][j] * xi) + spec.q[i][j]);
    }
  }

  double grad_lipschitz(const Eigen::VectorXd& y) const {
    double extra = 0.0;
    for (int i = 0; i < inst.n; ++i) {
      double s = 0.0;
      for (int j = 0; j < inst.m; ++j) s += y[j] * 2.0 * lam_max_p[i][j];
      extra = std::max(extra, s);
    }
    return 2.0 * lam_max_a + extra;
  }

  void project_blocks(Eigen::VectorXd& x, Eigen::VectorXd& scratch) const {
    for (int i = 0; i < inst.n; ++i) {
      auto seg = x.segment(inst.offsets[i], inst.dims[i]);
      auto out = scratch.segment(inst.offsets[i], inst.dims[i]);
      inst.sets[i].project(seg, out);
      seg = out;
    }
  }

  // || x - P_X(x - grad) ||, the stationarity part of the KKT residual.
  double stationarity_residual(const Eigen::VectorXd& x,
                               const Eigen::VectorXd& y) const {
    Eigen::VectorXd grad(inst.d), moved(inst.d), scratch(inst.d);
    lagrangian_grad(x, y, grad);
    moved = x - grad;
    project_blocks(moved, scratch);
    return (x - moved).norm();
  }

  // Accelerated projected gradient on x -> f0(x) + <y, sum g_i(x^i)>, warm
  // started; stops when the projected-gradient residual falls below tol.
  void inner_minimize(const Eigen::VectorXd& y, Eigen::VectorXd& x, double tol,
                      int max_iters) const {
    const int d = inst.d;
    const double step = 1.0 / grad_lipschitz(y);
    Eigen::VectorXd grad(d), v = x, x_prev(d), scratch(d), probe(d);
    double t_prev = 1.0;
    for (int k = 0; k < max_iters; ++k) {
      lagrangian_grad(v, y, grad);
      x_prev = x;
      x = v - step * grad;
      project_blocks(x, scratch);
      if ((v - x).dot(x - x_prev) > 0.0) {
        v = x;  // momentum restart
        t_prev = 1.0;
      } else {
        const double t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
        v = x + ((t_prev - 1.0) / t) * (x - x_prev);
        t_prev = t;
      }
      if (k % 8 == 7) {
        lagrangian_grad(x, y, grad);
        probe = x - step * grad;
        project_blocks(probe, scratch);
        if ((x - probe).norm() / step <= tol) return;
      }
    }
  }
};

}  // namespace

ReferenceSolution solve_reference(const ProblemInstance& inst, double tol,
                                  std::int64_t max_outer_iterations,
                                  std::optional<Eigen::VectorXd> x0) {
  if (!inst.quad)
    throw InvalidConstants(
        "solve_reference: needs a quadratic-backed instance (exact gradients)");
  if (!(tol > 0.0)) throw InvalidConstants("solve_reference: tol must be > 0");

  KktWorkspace ws(inst);
  Eigen::VectorXd x = x0.value_or(Eigen::VectorXd::Zero(inst.d));
  if (x.size() != inst.d)
    throw DimensionMismatch("solve_reference: x0 has wrong dimension");
  {
    Eigen::VectorXd scratch(inst.d);
    ws.project_blocks(x, scratch);
  }
  Eigen::VectorXd y = Eigen::VectorXd::Zero(inst.m);

  const double sigma = 2.0 * ws.lam_min_a;
  if (!(sigma > 0.0))
    throw NoConvergence("solve_reference: objective is not strongly convex");

  // Guaranteed-ascent dual step: the dual gradient y -> sum_i g_i(x(y)^i) is
  // (Mg^2 / sigma)-Lipschitz.
  double mg = inst.consts.Mg;
  if (inst.m > 0 && !(mg > 0.0)) mg = 1.0;
  const double beta = inst.m > 0 ? sigma / (mg * mg) : 0.0;
  const double inner_tol = std::max(tol * 0.05, 1e-14);

  ReferenceSolution sol;
  Eigen::VectorXd g_sum(inst.m);
  for (std::int64_t outer = 0; outer < max_outer_iterations; ++outer) {
    ws.inner_minimize(y, x, inner_tol, 50000);
    double residual = ws.stationarity_residual(x, y);
    if (inst.m > 0) {
      g_sum = coupled_constraint_sum(inst, x);
      residual =
          std::max(residual, (y - (y + g_sum).cwiseMax(0.0)).norm());
    }
    sol.outer_iterations = outer + 1;
    if (residual <= tol) {
      sol.kkt_residual = residual;
      sol.x_star = x;
      sol.y_star = y;
      sol.y_norm = y.norm();
      sol.f_star = ws.f0(x);
      return sol;
    }
    if (inst.m > 0) y = (y + beta * g_sum).cwiseMax(0.0);
  }
  throw NoConvergence(
      "solve_reference: KKT residual did not reach tolerance within budget");
}

}  // namespace mazo
