#include "mazo/checks.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mazo/diffusion.hpp"
#include "mazo/errors.hpp"
#include "mazo/estimators.hpp"
#include "mazo/rng.hpp"
#include "mazo/sets.hpp"

namespace mazo {

namespace {

CheckReport fail(std::string name, std::string detail) {
  return CheckReport{std::move(name), false, std::move(detail)};
}

CheckReport pass(std::string name, std::string detail = "") {
  return CheckReport{std::move(name), true, std::move(detail)};
}

}  // namespace

CheckReport check_doubly_stochastic(
    const Eigen::MatrixXd& w, const std::vector<std::vector<int>>* neighbors) {
  const char* name = "doubly-stochastic-weights";
  const auto n = w.rows();
  constexpr double tol = 1e-12;
  if (w.cols() != n) return fail(name, "W is not square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(w.row(i).sum() - 1.0) > tol)
      return fail(name, "row sum != 1 at row " + std::to_string(i));
    if (std::abs(w.col(i).sum() - 1.0) > tol)
      return fail(name, "column sum != 1 at column " + std::to_string(i));
    if (!(w(i, i) > 0.0))
      return fail(name, "nonpositive diagonal at " + std::to_string(i));
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(w(i, j) - w(j, i)) > tol)
        return fail(name, "asymmetry at (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
  }
  if (neighbors) {
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<char> is_nbr(n, 0);
      for (int k : (*neighbors)[i]) is_nbr[k] = 1;
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j && !is_nbr[j] && w(i, j) != 0.0)
          return fail(name, "nonzero weight off the edge set at (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                ")");
    }
  }
  return pass(name);
}

CheckReport check_delay_law(std::uint64_t seed) {
  const char* name = "gossip-delay-law";
  std::vector<Graph> suite;
  for (int n : {2, 3, 5, 8, 12}) suite.push_back(path_graph(n));
  for (int n : {3, 4, 6, 9, 12}) suite.push_back(ring_graph(n));
  for (int n : {3, 5, 8, 12}) suite.push_back(star_graph(n));
  for (int n : {4, 8}) suite.push_back(complete_graph(n));
  SplitMix64 gen(mix64(seed ^ 0xb5470917ec8248a1ULL));
  int k = 0;
  while (suite.size() < 30) {
    const int n = 4 + static_cast<int>(gen.next() % 9);  // 4..12
    const double p = (k % 2 == 0) ? 0.35 : 0.55;
    suite.push_back(erdos_renyi_connected(n, p, gen.next()));
    ++k;
  }

  for (std::size_t g = 0; g < suite.size(); ++g) {
    const auto& graph = suite[g];
    const auto dist = shortest_path_distances(graph);
    const int diameter = dist.maxCoeff();
    const auto neighbors = graph.adjacency();
    std::vector<int> dims(graph.n, 1);
    DiffusionNetwork net(neighbors, dims, diameter + 1);
    std::vector<double> diffs(graph.n);
    std::vector<Eigen::VectorXd> zs(graph.n, Eigen::VectorXd::Ones(1));
    const std::int64_t horizon = diameter + 100;
    for (std::int64_t t = 0; t < horizon; ++t) {
      for (int i = 0; i < graph.n; ++i)
        diffs[i] = static_cast<double>(t * graph.n + i);
      net.step(t, diffs, zs);
      if (t < diameter) continue;
      for (int i = 0; i < graph.n; ++i)
        for (int j = 0; j < graph.n; ++j)
          if (net.table(i).stamp[j] != t - dist(i, j)) {
            std::ostringstream msg;
            msg << "graph " << g << " (n=" << graph.n << "): stamp[" << i
                << "][" << j << "] = " << net.table(i).stamp[j] << " at t=" << t
                << ", expected " << t - dist(i, j);
            return fail(name, msg.str());
          }
    }
  }
  return pass(name, "30 graphs, exact stamps over 100 post-warm-up rounds");
}

namespace {

struct GridResult {
  Eigen::Vector2d argmin;
  double value = 0.0;
};

// Dense grid argmin of a convex objective over a rectangle with a feasibility
// mask, followed by staged window refinement around the running winner.
// Near a curved boundary the objective can be flat along the arc, so one
// refinement is not enough; successive shrinking windows pin the argmin to
// the final resolution.
template <typename Objective, typename Feasible>
GridResult grid_argmin(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                       const Objective& obj, const Feasible& feasible) {
  GridResult best;
  best.value = std::numeric_limits<double>::infinity();
  const auto scan = [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                        int steps) {
    Eigen::Vector2d y;
    for (int i = 0; i <= steps; ++i) {
      y[0] = a[0] + (b[0] - a[0]) * i / steps;
      for (int j = 0; j <= steps; ++j) {
        y[1] = a[1] + (b[1] - a[1]) * j / steps;
        if (!feasible(y)) continue;
        const double v = obj(y);
        if (v < best.value) {
          best.value = v;
          best.argmin = y;
        }
      }
    }
  };
  scan(lo, hi, 250);
  double window = (hi - lo).maxCoeff() / 250.0 * 8.0;
  for (int stage = 0; stage < 5; ++stage) {
    const Eigen::Vector2d center = best.argmin;
    const Eigen::Vector2d flo =
        (center.array() - window).matrix().cwiseMax(lo);
    const Eigen::Vector2d fhi =
        (center.array() + window).matrix().cwiseMin(hi);
    scan(flo, fhi, 240);
    window = std::max(window / 6.0, 6.0 * (best.argmin - center).norm());
  }
  // Compass-search polish: the grid can stall in the flat valley along a
  // curved boundary; shrinking directional probes walk the winner to the
  // constrained minimizer without consulting any closed form. Fine angular
  // granularity matters: near a curved boundary the best feasible direction
  // is almost tangent, and coarse compasses stall early.
  double h = window;
  constexpr int n_dirs = 32;
  while (h > 1e-8) {
    bool improved = false;
    for (int k = 0; k < n_dirs; ++k) {
      const double angle = 2.0 * M_PI * k / n_dirs;
      Eigen::Vector2d probe =
          best.argmin + h * Eigen::Vector2d(std::cos(angle), std::sin(angle));
      probe = probe.cwiseMax(lo).cwiseMin(hi);
      if (!feasible(probe)) continue;
      const double v = obj(probe);
      if (v < best.value) {
        best.value = v;
        best.argmin = probe;
        improved = true;
      }
    }
    if (!improved) h *= 0.5;
  }
  return best;
}

}  // namespace

CheckReport check_projection_oracles(int cases, std::uint64_t seed) {
  const char* name = "projection-oracles";
  SplitMix64 gen(mix64(seed ^ 0x3c6ef372fe94f82bULL));
  auto uniform = [&](double a, double b) {
    return a + (b - a) * gen.uniform01_halfopen();
  };

  for (int c = 0; c < cases; ++c) {
    // Dual prox: argmin_{y>=0, ||y||<=C} -<s,y> + ||y-p||^2 / (2 mu).
    // The prox target p + mu s stays within 0.005 of the feasible set: a grid
    // only identifies the argmin of a projection-type objective to 2e-3 when
    // the target is near the boundary; value optimality is asserted for every
    // case regardless.
    const double c_bound = uniform(0.5, 1.5);
    const double mu = uniform(0.1, 1.0);
    Eigen::Vector2d p(uniform(0.0, c_bound), uniform(0.0, c_bound));
    if (p.norm() > c_bound) p *= 0.9 * c_bound / p.norm();
    Eigen::Vector2d s(uniform(-2.0, 2.0), uniform(-2.0, 2.0));
    {
      Eigen::Vector2d target = p + mu * s;
      const Eigen::Vector2d inside =
          Eigen::Vector2d(project_dual(target, c_bound));
      const double dist = (target - inside).norm();
      if (dist > 0.005) {
        s += (0.005 / dist - 1.0) * (target - inside) / mu;
      }
    }
    const Eigen::VectorXd closed = dual_step(p, s, mu, c_bound);
    auto dual_obj = [&](const Eigen::Vector2d& y) {
      return -s.dot(y) + (y - p).squaredNorm() / (2.0 * mu);
    };
    const auto grid = grid_argmin(
        Eigen::Vector2d::Zero(), Eigen::Vector2d::Constant(c_bound), dual_obj,
        [&](const Eigen::Vector2d& y) { return y.norm() <= c_bound; });
    if (dual_obj(Eigen::Vector2d(closed)) > grid.value + 1e-10)
      return fail(name, "dual prox beaten by a grid point at case " +
                            std::to_string(c));
    if ((grid.argmin - Eigen::Vector2d(closed)).norm() > 2e-3)
      return fail(name, "dual prox mismatch vs grid search at case " +
                            std::to_string(c));

    // Primal prox: argmin_{x in set} <v,x> + ||x-x0||^2 / (2 eta).
    const double eta = uniform(0.1, 1.0);
    const bool use_ball = (gen.next() & 1u) != 0;
    FeasibleSet set =
        use_ball
            ? FeasibleSet::ball(Eigen::Vector2d::Zero(), uniform(0.5, 2.0))
            : FeasibleSet::box(Eigen::Vector2d(uniform(-2.0, -0.2),
                                               uniform(-2.0, -0.2)),
                               Eigen::Vector2d(uniform(0.2, 2.0),
                                               uniform(0.2, 2.0)));
    Eigen::Vector2d x0(uniform(-1.0, 1.0), uniform(-1.0, 1.0));
    x0 = Eigen::Vector2d(set.project(x0));
    Eigen::Vector2d v(uniform(-3.0, 3.0), uniform(-3.0, 3.0));
    {
      Eigen::Vector2d target = x0 - eta * v;
      const Eigen::Vector2d inside = Eigen::Vector2d(set.project(target));
      const double dist = (target - inside).norm();
      if (dist > 0.005) v += (0.005 / dist - 1.0) * (inside - target) / eta;
    }
    const Eigen::VectorXd stepped = primal_step(x0, v, eta, set);
    auto primal_obj = [&](const Eigen::Vector2d& x) {
      return v.dot(x) + (x - x0).squaredNorm() / (2.0 * eta);
    };
    const double extent = set.sup_norm() + 0.1;
    const auto grid2 = grid_argmin(
        Eigen::Vector2d::Constant(-extent), Eigen::Vector2d::Constant(extent),
        primal_obj,
        [&](const Eigen::Vector2d& x) { return set.contains(x, 1e-12); });
    if (primal_obj(Eigen::Vector2d(stepped)) > grid2.value + 1e-10)
      return fail(name, "primal prox beaten by a grid point at case " +
                            std::to_string(c));
    if ((grid2.argmin - Eigen::Vector2d(stepped)).norm() > 2e-3)
      return fail(name, "primal prox mismatch vs grid search at case " +
                            std::to_string(c));
  }

  // Nonexpansiveness of the projections on random pairs.
  for (int k = 0; k < 10000; ++k) {
    const int dim = 1 + static_cast<int>(gen.next() % 5);
    Eigen::VectorXd a(dim), b(dim);
    for (int i = 0; i < dim; ++i) {
      a[i] = uniform(-4.0, 4.0);
      b[i] = uniform(-4.0, 4.0);
    }
    FeasibleSet set = (k % 2 == 0)
                          ? FeasibleSet::ball(Eigen::VectorXd::Zero(dim),
                                              uniform(0.2, 3.0))
                          : FeasibleSet::box(
                                Eigen::VectorXd::Constant(dim, uniform(-2, 0)),
                                Eigen::VectorXd::Constant(dim, uniform(0, 2)));
    if ((set.project(a) - set.project(b)).norm() > (a - b).norm() + 1e-12)
      return fail(name, "projection expansive at pair " + std::to_string(k));
    const double cb = uniform(0.2, 3.0);
    if ((project_dual(a, cb) - project_dual(b, cb)).norm() >
        (a - b).norm() + 1e-12)
      return fail(name, "dual projection expansive at pair " + std::to_string(k));
  }
  return pass(name, std::to_string(cases) + " grid cases, 1e4 pairs");
}

CheckReport check_estimator_statistics(std::uint64_t seed) {
  const char* name = "estimator-statistics";
  SplitMix64 gen(mix64(seed ^ 0xa4093822299f31d0ULL));
  const int d = 5;

  // Affine functions: exact for any u and direction.
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd a(d), x(d), z(d);
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, a);
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, x);
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, z);
    const double b = gen.uniform01();
    const double u = std::pow(10.0, -6.0 + 6.0 * gen.uniform01_halfopen());
    const double got = two_point_scalar_diff(
        [&](Eigen::Ref<const Eigen::VectorXd> v) { return a.dot(v) + b; }, x,
        u, z);
    const double want = a.dot(z);
    if (std::abs(got - want) > 1e-9 * (1.0 + std::abs(want)))
      return fail(name, "affine case not exact (u = " + std::to_string(u) + ")");
  }

  // Monte Carlo mean of D * z on a quadratic: within 3 standard errors of the
  // true gradient, componentwise. Smoothing leaves a quadratic's gradient
  // unchanged, so the smoothed and true gradients coincide.
  Eigen::MatrixXd a_mat(d, d);
  {
    Eigen::VectorXd col(d);
    for (int j = 0; j < d; ++j) {
      fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, col);
      a_mat.col(j) = col;
    }
    a_mat = Eigen::MatrixXd(0.5 * (a_mat + a_mat.transpose()));
  }
  Eigen::VectorXd b_vec(d), x(d);
  fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, b_vec);
  fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, x);
  auto f = [&](Eigen::Ref<const Eigen::VectorXd> v) {
    return v.dot(a_mat * v) + b_vec.dot(v);
  };
  const Eigen::VectorXd grad = 2.0 * (a_mat * x) + b_vec;
  const int n_draws = 100000;
  const double u = 0.01;
  Eigen::VectorXd z(d), mean = Eigen::VectorXd::Zero(d),
                   m2 = Eigen::VectorXd::Zero(d);
  StreamKey mc_key{gen.next(), 0, 0};
  for (int k = 0; k < n_draws; ++k) {
    fill_gaussian(mc_key, StreamTag::kPrimary, k, z);
    const Eigen::VectorXd est = two_point_scalar_diff(f, x, u, z) * z;
    const Eigen::VectorXd delta = est - mean;
    mean += delta / static_cast<double>(k + 1);
    m2 += delta.cwiseProduct(est - mean);
  }
  for (int i = 0; i < d; ++i) {
    const double se =
        std::sqrt(m2[i] / (n_draws - 1.0) / static_cast<double>(n_draws));
    if (std::abs(mean[i] - grad[i]) > 3.0 * se) {
      std::ostringstream msg;
      msg << "MC mean off by " << std::abs(mean[i] - grad[i]) << " > 3se="
          << 3.0 * se << " in component " << i;
      return fail(name, msg.str());
    }
  }
  return pass(name, "affine exactness and 1e5-draw unbiasedness");
}

CheckReport check_smoothing_bound(const ProblemInstance& inst, int samples,
                                  std::uint64_t seed) {
  const char* name = "smoothing-gap-bound";
  if (!inst.quad) return fail(name, "needs a quadratic instance");
  const auto& spec = *inst.quad;
  const auto& cs = inst.consts;
  if (inst.m == 0) return pass(name, "no constraints to check");
  const double u_max = cs.Mg / ((static_cast<double>(inst.d) + 6.0) * cs.Lg);
  SplitMix64 gen(mix64(seed ^ 0x9c30d5392af26013ULL));
  int checked = 0;
  while (checked < samples) {
    for (int i = 0; i < inst.n && checked < samples; ++i) {
      for (int j = 0; j < inst.m && checked < samples; ++j) {
        const double u = u_max * (1e-3 + (1.0 - 1e-3) * gen.uniform01_halfopen());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            spec.P[i][j], Eigen::EigenvaluesOnly);
        const double lij = 2.0 * es.eigenvalues().cwiseAbs().maxCoeff();
        const double mij = 2.0 * es.eigenvalues().cwiseAbs().maxCoeff() *
                               inst.sets[i].sup_norm() +
                           spec.q[i][j].norm();
        const auto res =
            smoothing_gap_bound_check(spec.P[i][j], u, mij, lij, 8, gen.next());
        if (!res.pass) {
          std::ostringstream msg;
          msg << "bound violated for g[" << i << "][" << j << "] at u=" << u
              << ": gap=" << res.gap << " bound=" << res.bound;
          return fail(name, msg.str());
        }
        ++checked;
      }
    }
  }
  return pass(name, std::to_string(samples) + " (x, u) samples, zero violations");
}

CheckReport check_consensus_contraction(const ProblemInstance& inst,
                                        const NetworkTopology& topo,
                                        const ParamSchedule& sched,
                                        std::uint64_t seed) {
  const char* name = "consensus-contraction";
  const auto w_report = check_doubly_stochastic(topo.weights, &topo.neighbors);
  if (!w_report.pass) return fail(name, "W invariants: " + w_report.detail);

  bool ok = true;
  std::ostringstream why;
  double max_spread = 0.0, max_s_frob = 0.0, max_mu = 0.0;
  RunOptions opts;
  opts.metrics_stride = sched.horizon;  // metrics are irrelevant here
  opts.monitor = [&](const RoundMonitor& mon) {
    max_s_frob = std::max(max_s_frob, mon.s_frob);
    max_mu = std::max(max_mu, mon.mu);
    max_spread = std::max(max_spread, mon.dev_y_after);
    if (mon.dev_p > topo.rho * mon.dev_y_before + 1e-9) {
      if (ok)
        why << "mix at t=" << mon.t << ": dev(P)=" << mon.dev_p << " > rho*"
            << mon.dev_y_before;
      ok = false;
    }
    if (mon.dev_y_after >
        topo.rho * mon.dev_y_before + mon.mu * mon.s_frob + 1e-9) {
      if (ok)
        why << "round t=" << mon.t << ": dev(Y+)=" << mon.dev_y_after
            << " > rho*dev(Y) + mu*||S||";
      ok = false;
    }
  };
  run(inst, topo, sched, seed, 0, opts);
  if (!ok) return fail(name, why.str());
  const double steady = max_mu * max_s_frob / (1.0 - topo.rho) + 1e-9;
  if (max_spread > steady) {
    std::ostringstream msg;
    msg << "steady-state spread " << max_spread << " exceeds mu*max||S||/(1-rho)="
        << steady;
    return fail(name, msg.str());
  }
  std::ostringstream detail;
  detail << "max spread " << max_spread << " within bound " << steady;
  return pass(name, detail.str());
}

std::vector<CheckReport> run_verification_suites(std::uint64_t seed) {
  std::vector<CheckReport> reports;
  reports.push_back(check_delay_law(seed));
  reports.push_back(check_projection_oracles(200, seed + 1));
  reports.push_back(check_estimator_statistics(seed + 2));

  auto generated = generate_quadratic(seed + 3, 6, default_dims(6, 14), 2,
                                      0.1, 1.6);
  auto topo = build_topology(erdos_renyi_connected(6, 0.5, seed + 4),
                             generated.instance.dims);
  reports.push_back(check_doubly_stochastic(topo.weights, &topo.neighbors));
  reports.push_back(check_smoothing_bound(generated.instance, 1000, seed + 5));
  set_dual_bound(generated.instance, 5.0);
  auto sched = ParamSchedule::constant(0.002, 0.002, 0.01, 5.0, 2000);
  reports.push_back(
      check_consensus_contraction(generated.instance, topo, sched, seed + 6));
  return reports;
}

}  // namespace mazo
