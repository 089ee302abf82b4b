#include "mazo/solver.hpp"

#include <cmath>
#include <string>

#include "mazo/diffusion.hpp"
#include "mazo/errors.hpp"
#include "mazo/sets.hpp"

namespace mazo {

HorizonParams compute_horizon_params_core(const InstanceConstants& cs,
                                             int n, int d, double b_bar,
                                             double frak_b_bar, double rho,
                                             std::int64_t horizon, int m) {
  if (horizon < 1) throw InvalidConstants("horizon rule: horizon must be >= 1");
  if (!(cs.R_bar > 0.0)) throw InvalidConstants("horizon rule: R_bar must be > 0");
  if (!(rho >= 0.0) || rho >= 1.0)
    throw InvalidConstants("horizon rule: rho must lie in [0, 1)");
  const double t_dbl = static_cast<double>(horizon);
  const double dd = static_cast<double>(d);
  const double c = cs.C;
  if (m > 0 && !(c > 0.0))
    throw InvalidConstants("horizon rule: dual bound C must be calibrated");

  HorizonParams tc;
  tc.b_bar = b_bar;
  tc.frak_b_bar = frak_b_bar;
  tc.rho = rho;
  tc.r_bar = cs.R_bar;
  tc.l_max = cs.L_max;

  const double mg2c2 = cs.Mg * cs.Mg * c * c;
  tc.xi = (cs.M0 * frak_b_bar * std::sqrt(dd) + cs.L0 * b_bar * dd * cs.R_bar +
           2.0 * std::sqrt(3.0) * frak_b_bar * dd * cs.M0) *
              std::sqrt(24.0 * cs.M0 * cs.M0 + 27.0 * mg2c2) +
          104.0 * cs.M0 * cs.M0 * dd + 124.0 * mg2c2 * dd;
  tc.zeta = 403.0 * dd * cs.Mg * cs.Mg * cs.R_bar +
            (1.0 / (1.0 - rho)) *
                (6.0 * dd * cs.Z * cs.Z + 3.0 * cs.Mg * cs.Mg * cs.R_bar +
                 243.0 * cs.R_bar * dd * cs.Mg * cs.Mg);

  if (!(tc.xi > 0.0))
    throw InvalidConstants("horizon rule: xi must be positive");
  tc.eta = cs.R_bar / std::sqrt(t_dbl * tc.xi);

  if (m > 0) {
    if (!(tc.zeta > 0.0))
      throw InvalidConstants("horizon rule: zeta must be positive");
    tc.mu = c * std::sqrt(2.0 * static_cast<double>(n)) /
            std::sqrt(t_dbl * tc.zeta);
  } else {
    tc.mu = 0.0;  // no dual variable without coupled constraints
  }

  const double l_for_u = std::max(cs.L0, cs.Lg);
  if (!(l_for_u > 0.0))
    throw InvalidConstants("horizon rule: need a positive smoothness bound");
  const double branch2 = 1.0 / std::sqrt(dd * std::sqrt(t_dbl) * l_for_u);
  if (cs.Mg > 0.0 && cs.Lg > 0.0) {
    tc.u = std::min(cs.Mg / ((dd + 6.0) * cs.Lg), branch2);
  } else {
    tc.u = branch2;
  }
  return tc;
}

HorizonParams compute_horizon_params(const ProblemInstance& inst,
                                        const NetworkTopology& topo,
                                        std::int64_t horizon) {
  return compute_horizon_params_core(inst.consts, inst.n, inst.d, topo.b_bar,
                                     topo.frak_b_bar, topo.rho, horizon,
                                     inst.m);
}

double ParamSchedule::eta_t(std::int64_t t) const {
  switch (mode) {
    case ScheduleMode::kConstant:
      return eta_const;
    case ScheduleMode::kDiminishing:
      return 1.0 / (std::sqrt(static_cast<double>(t)) + dim_offset);
    case ScheduleMode::kHorizonRule:
      return 1.0 / (l0_plus_lmax + 1.0 / horizon_eta);
  }
  return 0.0;
}

double ParamSchedule::mu_t(std::int64_t t) const {
  switch (mode) {
    case ScheduleMode::kConstant:
      return mu_const;
    case ScheduleMode::kDiminishing:
      return 1.0 / (std::sqrt(static_cast<double>(t)) + dim_offset);
    case ScheduleMode::kHorizonRule:
      return mu_const;
  }
  return 0.0;
}

void ParamSchedule::validate() const {
  if (horizon < 1) throw InvalidConstants("schedule: horizon must be >= 1");
  if (!(u > 0.0)) throw InvalidConstants("schedule: smoothing radius must be > 0");
  if (!(gamma > 0.0) || theta < 0.0)
    throw InvalidConstants("schedule: weights must be positive");
  if (!(eta_t(0) > 0.0) || !(eta_t(horizon - 1) > 0.0))
    throw InvalidConstants("schedule: primal steps must be positive");
  if (mu_t(0) < 0.0)
    throw InvalidConstants("schedule: dual steps must be nonnegative");
  if (mode == ScheduleMode::kHorizonRule) {
    const auto bad = check_weight_relations(
        [this](std::int64_t t) { return gamma_t(t); },
        [this](std::int64_t t) { return theta_t(t); },
        [this](std::int64_t t) { return mu_t(t); }, horizon);
    if (bad >= 0)
      throw InvalidConstants(
          "schedule: weight relations violated at round " + std::to_string(bad));
  }
}

std::int64_t check_weight_relations(
    const std::function<double(std::int64_t)>& gamma_fn,
    const std::function<double(std::int64_t)>& theta_fn,
    const std::function<double(std::int64_t)>& mu_fn, std::int64_t horizon,
    double tol) {
  const std::int64_t probe = std::min<std::int64_t>(horizon, 4096);
  for (std::int64_t t = 1; t < probe; ++t) {
    if (std::abs(gamma_fn(t) * theta_fn(t) - gamma_fn(t - 1)) > tol) return t;
    const double mu_t = mu_fn(t), mu_prev = mu_fn(t - 1);
    if (mu_t == 0.0 && mu_prev == 0.0) continue;  // no dual variable
    if (mu_t <= 0.0 || mu_prev <= 0.0) return t;
    if (std::abs(gamma_fn(t) / mu_t - gamma_fn(t - 1) / mu_prev) >
        tol * std::abs(gamma_fn(t) / mu_t))
      return t;
  }
  return -1;
}

ParamSchedule ParamSchedule::constant(double eta, double mu, double u,
                                      double c_bound, std::int64_t horizon) {
  ParamSchedule s;
  s.mode = ScheduleMode::kConstant;
  s.eta_const = eta;
  s.mu_const = mu;
  s.u = u;
  s.c_bound = c_bound;
  s.horizon = horizon;
  return s;
}

ParamSchedule ParamSchedule::diminishing(double offset, double u,
                                         double c_bound, std::int64_t horizon) {
  ParamSchedule s;
  s.mode = ScheduleMode::kDiminishing;
  s.dim_offset = offset;
  s.u = u;
  s.c_bound = c_bound;
  s.horizon = horizon;
  return s;
}

ParamSchedule ParamSchedule::horizon_rule(const HorizonParams& tc,
                                     const InstanceConstants& cs,
                                     std::int64_t horizon) {
  ParamSchedule s;
  s.mode = ScheduleMode::kHorizonRule;
  s.horizon_eta = tc.eta;
  s.l0_plus_lmax = cs.L0 + cs.L_max;
  s.mu_const = tc.mu;
  s.u = tc.u;
  s.c_bound = cs.C;
  s.horizon = horizon;
  s.theta = 1.0;
  s.gamma = 1.0;
  return s;
}

Eigen::VectorXd extrapolate_from_linearization(
    AgentState& state, Eigen::Ref<const Eigen::VectorXd> ell_new,
    double theta) {
  Eigen::VectorXd s = (1.0 + theta) * ell_new - theta * state.ell_curr;
  state.ell_prev = state.ell_curr;
  state.ell_curr = ell_new;
  return s;
}

Eigen::VectorXd extrapolate_constraint(AgentState& state,
                                       Eigen::Ref<const Eigen::VectorXd> g_obs,
                                       Eigen::Ref<const Eigen::MatrixXd> jac_prev,
                                       Eigen::Ref<const Eigen::VectorXd> x_curr,
                                       double theta) {
  if (jac_prev.cols() != x_curr.size() || g_obs.size() != jac_prev.rows())
    throw DimensionMismatch("extrapolate_constraint: shape mismatch");
  const Eigen::VectorXd ell_new =
      g_obs + jac_prev * (x_curr - state.x_prev);
  return extrapolate_from_linearization(state, ell_new, theta);
}

Eigen::VectorXd consensus_mix(Eigen::Ref<const Eigen::RowVectorXd> w_row,
                              Eigen::Ref<const Eigen::MatrixXd> duals) {
  if (w_row.size() != duals.rows())
    throw DimensionMismatch("consensus_mix: weight row does not match duals");
  return (w_row * duals).transpose();
}

Eigen::VectorXd dual_step(Eigen::Ref<const Eigen::VectorXd> p,
                          Eigen::Ref<const Eigen::VectorXd> s, double mu,
                          double c_bound) {
  if (!(mu > 0.0)) throw InvalidConstants("dual_step: mu must be > 0");
  return project_dual(p + mu * s, c_bound);
}

Eigen::VectorXd primal_step(Eigen::Ref<const Eigen::VectorXd> x,
                            Eigen::Ref<const Eigen::VectorXd> v, double eta,
                            const FeasibleSet& set) {
  if (!(eta > 0.0)) throw InvalidConstants("primal_step: eta must be > 0");
  return set.project(x - eta * v);
}

namespace {

double frobenius_deviation(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) return 0.0;
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  return (rows.rowwise() - mean).norm();
}

double max_row_deviation(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0 || rows.cols() == 0) return 0.0;
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  return (rows.rowwise() - mean).rowwise().norm().maxCoeff();
}

}  // namespace

TrialResult run(const ProblemInstance& inst, const NetworkTopology& topo,
                const ParamSchedule& sched, std::uint64_t master_seed,
                std::uint32_t trial, const RunOptions& opts) {
  if (topo.n != inst.n || topo.dims != inst.dims)
    throw DimensionMismatch("run: topology and instance disagree on agents");
  sched.validate();
  const int n = inst.n, m = inst.m, d = inst.d;
  const std::int64_t horizon = sched.horizon;
  const double u = sched.u;
  const double c_bound = sched.c_bound;
  if (m > 0 && !(c_bound > 0.0))
    throw InvalidConstants("run: dual bound must be positive when m > 0");
  const double divergence_limit = 1e3 * std::max(inst.consts.R_bar, 1.0);

  std::vector<PerturbationStreams> streams(n);
  for (int i = 0; i < n; ++i)
    streams[i] = PerturbationStreams{
        StreamKey{master_seed, trial, static_cast<std::uint32_t>(i)}, u};

  DiffusionNetwork net(topo.neighbors, inst.dims, topo.diameter + 1);
  net.set_trace(opts.diffusion_trace);

  // Joint primal iterate; duals as rows of an n x m matrix.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd proj(inst.dims[i]);
    inst.sets[i].project(x.segment(inst.offsets[i], inst.dims[i]), proj);
    x.segment(inst.offsets[i], inst.dims[i]) = proj;
  }
  Eigen::VectorXd x_prev = x;
  Eigen::MatrixXd duals = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd duals_next = duals, p_mix = duals, s_rows = duals;
  Eigen::MatrixXd g_obs_prev(n, m), ell_curr(n, m), ell_prev(n, m);
  Eigen::MatrixXd jac_coeff(n, m);   // two-point quotients per constraint
  Eigen::VectorXd jac_dir(d);        // the direction that generated them
  Eigen::VectorXd z(d), zhat(d), zbar(d);
  Eigen::VectorXd xp(d), xm(d), f_plus(n), f_minus(n);
  Eigen::VectorXd g_now(m), ell_new(m), s_i(m), y_i(m);
  Eigen::VectorXd x_next(d), v_i, g0_i, x_avg(d);
  std::vector<double> own_diff(n, 0.0);
  std::vector<Eigen::VectorXd> own_z(n);
  for (int i = 0; i < n; ++i) own_z[i].resize(inst.dims[i]);

  Eigen::VectorXd running_sum = Eigen::VectorXd::Zero(d);
  double gamma_sum = 0.0;

  TrialResult result;
  result.trial = trial;
  result.master_seed = master_seed;
  result.counters.assign(n, OracleCounter{});
  if (opts.record_iterates) result.iterates.resize(horizon, d);
  const std::int64_t stride = std::max<std::int64_t>(1, opts.metrics_stride);
  std::vector<double> viol_rows;

  Eigen::VectorXd f0_vals(n);

  for (std::int64_t t = 0; t < horizon; ++t) {
    const double eta = sched.eta_t(t);
    const double mu = sched.mu_t(t);
    const double theta = sched.theta_t(t);
    const double gamma = sched.gamma_t(t);

    // Objective feedback at the two jointly played perturbed profiles.
    for (int i = 0; i < n; ++i)
      streams[i].primary(t, z.segment(inst.offsets[i], inst.dims[i]));
    xp = x + u * z;
    xm = x - u * z;
    inst.objective_all(xp, f_plus);
    inst.objective_all(xm, f_minus);
    for (int i = 0; i < n; ++i) {
      own_diff[i] = (f_plus[i] - f_minus[i]) / (2.0 * u);
      if (!std::isfinite(own_diff[i]))
        throw NonFiniteValue("run: objective feedback not finite at round " +
                             std::to_string(t) + ", agent " + std::to_string(i));
      own_z[i] = z.segment(inst.offsets[i], inst.dims[i]);
      result.counters[i].objective_evals += 2;
    }

    // Constraint feedback, extrapolated dual direction, fresh Jacobian draw.
    for (int i = 0; i < n; ++i) {
      const auto off = inst.offsets[i];
      const auto di = inst.dims[i];
      auto xi = x.segment(off, di);
      inst.constraint_vec(i, xi, g_now);
      result.counters[i].constraint_observations += 1;
      if (t == 0) {
        // Cold start: both linearizations equal the observed g_i(x_0), so
        // the first dual direction is plain observed feedback.
        ell_curr.row(i) = g_now.transpose();
        ell_prev.row(i) = g_now.transpose();
        s_rows.row(i) = g_now.transpose();
      } else {
        const double dir_step =
            jac_dir.segment(off, di).dot(xi - x_prev.segment(off, di));
        ell_new = g_obs_prev.row(i).transpose() +
                  jac_coeff.row(i).transpose() * dir_step;
        s_rows.row(i) =
            ((1.0 + theta) * ell_new - theta * ell_curr.row(i).transpose())
                .transpose();
        ell_prev.row(i) = ell_curr.row(i);
        ell_curr.row(i) = ell_new.transpose();
      }
      g_obs_prev.row(i) = g_now.transpose();
    }
    for (int i = 0; i < n; ++i) {
      const auto off = inst.offsets[i];
      const auto di = inst.dims[i];
      auto xi = x.segment(off, di);
      auto zh = zhat.segment(off, di);
      streams[i].constraint_dir(t, zh);
      for (int j = 0; j < m; ++j) {
        const double diff = (inst.constraint(i, j, xi + u * zh) -
                             inst.constraint(i, j, xi - u * zh)) /
                            (2.0 * u);
        if (!std::isfinite(diff))
          throw NonFiniteValue("run: constraint feedback not finite at round " +
                               std::to_string(t) + ", agent " +
                               std::to_string(i));
        jac_coeff(i, j) = diff;
      }
      result.counters[i].constraint_evals += 2 * m;
      jac_dir.segment(off, di) = zh;
    }

    // Difference-table round: record own entries, merge neighbor snapshots.
    net.step(t, own_diff, own_z);

    // Dual consensus and projected dual ascent.
    p_mix.noalias() = topo.weights * duals;
    for (int i = 0; i < n; ++i) {
      y_i = p_mix.row(i).transpose() + mu * s_rows.row(i).transpose();
      if (m > 0) {
        Eigen::VectorXd projected(m);
        project_dual(y_i, c_bound, projected);
        duals_next.row(i) = projected.transpose();
      }
    }

    // Primal update from the delayed estimator plus dual-weighted rows.
    for (int i = 0; i < n; ++i) {
      const auto off = inst.offsets[i];
      const auto di = inst.dims[i];
      auto xi = x.segment(off, di);
      auto zb = zbar.segment(off, di);
      streams[i].dual_weight_dir(t, zb);
      double weighted = 0.0;
      for (int j = 0; j < m; ++j) {
        const double diff = (inst.constraint(i, j, xi + u * zb) -
                             inst.constraint(i, j, xi - u * zb)) /
                            (2.0 * u);
        weighted += diff * duals_next(i, j);
      }
      result.counters[i].constraint_evals += 2 * m;

      g0_i = assemble_grad_f0(net.table(i), net.history(i), n);
      v_i = g0_i + weighted * zb;
      Eigen::VectorXd stepped = xi - eta * v_i;
      Eigen::VectorXd projected(di);
      inst.sets[i].project(stepped, projected);
      x_next.segment(off, di) = projected;
    }

    if (opts.monitor) {
      RoundMonitor mon;
      mon.t = t;
      mon.dev_y_before = frobenius_deviation(duals);
      mon.dev_p = frobenius_deviation(p_mix);
      mon.dev_y_after = frobenius_deviation(duals_next);
      mon.s_frob = s_rows.norm();
      mon.max_s_norm =
          m > 0 ? s_rows.rowwise().norm().maxCoeff() : 0.0;
      mon.mu = mu;
      opts.monitor(mon);
    }

    x_prev = x;
    x = x_next;
    duals = duals_next;

    if (!x.allFinite() || !duals.allFinite())
      throw NonFiniteIterate("run: iterate not finite at round " +
                             std::to_string(t));
    if (x.norm() > divergence_limit)
      throw NonFiniteIterate("run: iterate escaped the divergence guard at "
                             "round " + std::to_string(t));
    for (int i = 0; i < n; ++i) {
      if (!inst.sets[i].contains(x.segment(inst.offsets[i], inst.dims[i]),
                                 1e-9))
        throw std::logic_error("run: primal iterate left its action set");
      if (m > 0) {
        const double ynorm = duals.row(i).norm();
        if (duals.row(i).minCoeff() < -1e-12 || ynorm > c_bound + 1e-9)
          throw std::logic_error("run: dual iterate left the dual set");
      }
    }

    running_sum += gamma * x;
    gamma_sum += gamma;
    if (opts.record_iterates) result.iterates.row(t) = x.transpose();

    const std::int64_t completed = t + 1;
    if (completed % stride == 0 || completed == horizon) {
      x_avg = running_sum / gamma_sum;
      inst.objective_all(x_avg, f0_vals);
      result.sample_t.push_back(completed);
      result.f0_avg.push_back(f0_vals.sum() / static_cast<double>(n));
      const Eigen::VectorXd sums = coupled_constraint_sum(inst, x_avg);
      for (int j = 0; j < m; ++j) viol_rows.push_back(sums[j]);
      result.viol_norm.push_back(sums.cwiseMax(0.0).norm());
      result.dual_spread.push_back(max_row_deviation(duals));
      result.oracle_cumulative.push_back(result.counters[0].total());
    }
  }

  const auto samples = static_cast<Eigen::Index>(result.sample_t.size());
  result.viol.resize(samples, m);
  for (Eigen::Index s = 0; s < samples; ++s)
    for (int j = 0; j < m; ++j) result.viol(s, j) = viol_rows[s * m + j];
  result.x_avg_final = running_sum / gamma_sum;
  result.f0_final = result.f0_avg.empty() ? 0.0 : result.f0_avg.back();
  result.viol_norm_final =
      result.viol_norm.empty() ? 0.0 : result.viol_norm.back();
  return result;
}

}  // namespace mazo
