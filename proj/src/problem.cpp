#include "mazo/problem.hpp"

#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "mazo/errors.hpp"
#include "mazo/rng.hpp"

namespace mazo {

double global_objective(const ProblemInstance& inst,
                        Eigen::Ref<const Eigen::VectorXd> x) {
  if (x.size() != inst.d)
    throw DimensionMismatch("global_objective: point dimension mismatch");
  Eigen::VectorXd vals(inst.n);
  inst.objective_all(x, vals);
  return vals.sum() / static_cast<double>(inst.n);
}

Eigen::VectorXd coupled_constraint_sum(const ProblemInstance& inst,
                                       Eigen::Ref<const Eigen::VectorXd> x) {
  if (x.size() != inst.d)
    throw DimensionMismatch("coupled_constraint_sum: point dimension mismatch");
  Eigen::VectorXd total = Eigen::VectorXd::Zero(inst.m);
  Eigen::VectorXd gi(inst.m);
  for (int i = 0; i < inst.n; ++i) {
    inst.constraint_vec(i, inst.block(x, i), gi);
    total += gi;
  }
  return total;
}

double constraint_violation(const ProblemInstance& inst,
                            Eigen::Ref<const Eigen::VectorXd> x) {
  return coupled_constraint_sum(inst, x).cwiseMax(0.0).norm();
}

std::vector<int> default_dims(int n, int d) {
  if (n <= 0 || d < n) throw ConfigError("default_dims: need d >= n >= 1");
  std::vector<int> dims(n, d / n);
  for (int i = 0; i < d % n; ++i) dims[i] += 1;
  return dims;
}

namespace {

// Objective batch evaluation through one stacked GEMV; the hot loop calls
// this twice per round. The scratch buffer is thread-local because one
// instance is shared read-only across trial workers.
struct StackedObjective {
  Eigen::MatrixXd a_stacked;  // (n*d) x d
  Eigen::MatrixXd b_rows;     // n x d
  Eigen::VectorXd c;
  int n = 0, d = 0;

  void operator()(Eigen::Ref<const Eigen::VectorXd> x,
                  Eigen::Ref<Eigen::VectorXd> out) const {
    thread_local Eigen::VectorXd scratch;
    scratch.resize(a_stacked.rows());
    scratch.noalias() = a_stacked * x;
    for (int i = 0; i < n; ++i)
      out[i] = x.dot(scratch.segment(static_cast<Eigen::Index>(i) * d, d));
    out.noalias() += b_rows * x;
    out += c;
  }
};

Eigen::MatrixXd random_orthogonal(int d, SplitMix64& gen) {
  Eigen::MatrixXd g(d, d);
  Eigen::VectorXd col(d);
  for (int j = 0; j < d; ++j) {
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, col);
    g.col(j) = col;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Fix signs so the distribution does not depend on QR conventions.
  Eigen::VectorXd diag = qr.matrixQR().diagonal();
  for (int j = 0; j < d; ++j)
    if (diag[j] < 0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd random_spd(int d, double eig_min, double eig_max,
                           SplitMix64& gen) {
  Eigen::MatrixXd q = random_orthogonal(d, gen);
  Eigen::VectorXd lambda(d);
  for (int k = 0; k < d; ++k)
    lambda[k] = eig_min + (eig_max - eig_min) * gen.uniform01_halfopen();
  Eigen::MatrixXd m = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());  // kill rounding asymmetry
}

double sup_abs_quadratic(const Eigen::MatrixXd& p, const Eigen::VectorXd& q,
                         double r, double radius) {
  // Bound for |x^T P x + q^T x + r| over the origin ball of this radius.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p, Eigen::EigenvaluesOnly);
  const double lam = es.eigenvalues().cwiseAbs().maxCoeff();
  return lam * radius * radius + q.norm() * radius + std::abs(r);
}

}  // namespace

ProblemInstance make_instance(std::shared_ptr<const QuadraticSpec> spec) {
  ProblemInstance inst;
  inst.n = spec->n;
  inst.m = spec->m;
  inst.d = spec->d;
  inst.dims = spec->dims;
  inst.offsets.resize(inst.n);
  int off = 0;
  for (int i = 0; i < inst.n; ++i) {
    inst.offsets[i] = off;
    off += inst.dims[i];
  }
  if (off != inst.d) throw DimensionMismatch("make_instance: dims do not sum to d");

  for (int i = 0; i < inst.n; ++i)
    inst.sets.push_back(FeasibleSet::ball(
        Eigen::VectorXd::Zero(inst.dims[i]), spec->set_radius));

  auto stacked = std::make_shared<StackedObjective>();
  stacked->n = inst.n;
  stacked->d = inst.d;
  stacked->a_stacked.resize(static_cast<Eigen::Index>(inst.n) * inst.d, inst.d);
  stacked->b_rows.resize(inst.n, inst.d);
  stacked->c.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    stacked->a_stacked.middleRows(static_cast<Eigen::Index>(i) * inst.d,
                                  inst.d) = spec->A[i];
    stacked->b_rows.row(i) = spec->b[i].transpose();
    stacked->c[i] = spec->c[i];
  }

  inst.objective = [spec](int i, Eigen::Ref<const Eigen::VectorXd> x) {
    return spec->objective(i, x);
  };
  inst.objective_all = [stacked](Eigen::Ref<const Eigen::VectorXd> x,
                                 Eigen::Ref<Eigen::VectorXd> out) {
    (*stacked)(x, out);
  };
  inst.constraint = [spec](int i, int j, Eigen::Ref<const Eigen::VectorXd> xi) {
    return spec->constraint(i, j, xi);
  };
  inst.constraint_vec = [spec](int i, Eigen::Ref<const Eigen::VectorXd> xi,
                               Eigen::Ref<Eigen::VectorXd> out) {
    for (int j = 0; j < spec->m; ++j) out[j] = spec->constraint(i, j, xi);
  };

  // Closed-form constants over the compact sets.
  InstanceConstants& cs = inst.consts;
  cs.R_i.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) cs.R_i[i] = inst.sets[i].sup_norm();
  cs.R_bar = std::sqrt(std::inner_product(cs.R_i.begin(), cs.R_i.end(),
                                          cs.R_i.begin(), 0.0));
  double m0 = 0.0, l0 = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec->A[i],
                                                      Eigen::EigenvaluesOnly);
    const double lam_max = es.eigenvalues().cwiseAbs().maxCoeff();
    l0 = std::max(l0, 2.0 * lam_max);
    m0 = std::max(m0, 2.0 * lam_max * cs.R_bar + spec->b[i].norm());
  }
  cs.L0 = l0;
  cs.M0 = m0;
  cs.M_i.assign(inst.n, 0.0);
  cs.L_i.assign(inst.n, 0.0);
  double z_sq_max = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    double mi_sq = 0.0, li_sq = 0.0, zi_sq = 0.0;
    for (int j = 0; j < inst.m; ++j) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec->P[i][j],
                                                        Eigen::EigenvaluesOnly);
      const double lam_max = es.eigenvalues().cwiseAbs().maxCoeff();
      const double lij = 2.0 * lam_max;
      const double mij = 2.0 * lam_max * cs.R_i[i] + spec->q[i][j].norm();
      li_sq += lij * lij;
      mi_sq += mij * mij;
      const double zij = sup_abs_quadratic(spec->P[i][j], spec->q[i][j],
                                           spec->r[i][j], cs.R_i[i]);
      zi_sq += zij * zij;
    }
    cs.M_i[i] = std::sqrt(mi_sq);
    cs.L_i[i] = std::sqrt(li_sq);
    z_sq_max = std::max(z_sq_max, zi_sq);
  }
  cs.Mg = std::sqrt(std::inner_product(cs.M_i.begin(), cs.M_i.end(),
                                       cs.M_i.begin(), 0.0));
  cs.Lg = std::sqrt(std::inner_product(cs.L_i.begin(), cs.L_i.end(),
                                       cs.L_i.begin(), 0.0));
  cs.L_max = cs.L_i.empty() ? 0.0
                            : *std::max_element(cs.L_i.begin(), cs.L_i.end());
  cs.Z = std::sqrt(z_sq_max);
  cs.C = 0.0;  // calibrated against the reference dual later

  inst.quad = std::move(spec);
  return inst;
}

GeneratedProblem generate_quadratic(std::uint64_t seed, int n,
                                    std::vector<int> dims, int m,
                                    double eig_min, double eig_max,
                                    const GeneratorOptions& opts) {
  if (!(eig_min > 0.0) || eig_min > eig_max)
    throw ConfigError("generate_quadratic: need 0 < eig_min <= eig_max");
  if (n <= 0 || m < 0) throw ConfigError("generate_quadratic: bad n or m");
  if (static_cast<int>(dims.size()) != n)
    throw DimensionMismatch("generate_quadratic: dims size must be n");

  auto spec = std::make_shared<QuadraticSpec>();
  spec->seed = seed;
  spec->n = n;
  spec->m = m;
  spec->dims = dims;
  spec->d = std::accumulate(dims.begin(), dims.end(), 0);
  spec->eig_min = eig_min;
  spec->eig_max = eig_max;
  spec->set_radius = opts.set_radius;

  SplitMix64 gen(mix64(seed ^ 0x8f14e45fceea167aULL));
  Eigen::VectorXd noise;

  for (int i = 0; i < n; ++i) {
    spec->A.push_back(random_spd(spec->d, eig_min, eig_max, gen));
    noise.resize(spec->d);
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, noise);
    spec->b.push_back(opts.b_scale * noise);
    noise.resize(1);
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, noise);
    spec->c.push_back(opts.c_scale * noise[0]);
  }

  // Rescale so the top of the average spectrum sits exactly at eig_max.
  // Multiplicative only: keeps every A_i positive definite while the average
  // stays inside [eig_min, eig_max].
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec->average_a(),
                                                      Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().maxCoeff();
    const double scale = eig_max / top;
    for (auto& ai : spec->A) ai *= scale;
  }

  spec->P.resize(n);
  spec->q.resize(n);
  spec->r.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      spec->P[i].push_back(random_spd(dims[i], eig_min, eig_max, gen));
      noise.resize(dims[i]);
      fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, noise);
      spec->q[i].push_back(noise);
      spec->r[i].push_back(0.0);
    }
  }

  // Shift the constraint offsets so the ball of radius slater_ball_radius
  // around the origin is strictly feasible: the margin dominates the worst
  // growth of sum_i g_ij over that ball.
  const double rr = opts.slater_ball_radius;
  for (int j = 0; j < m; ++j) {
    double base = 0.0;      // sum_i g_ij(0) before shifting r
    double lam_max_sum = 0.0;
    double q_norm_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      base += spec->r[i][j];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(spec->P[i][j],
                                                        Eigen::EigenvaluesOnly);
      lam_max_sum = std::max(lam_max_sum, es.eigenvalues().maxCoeff());
      q_norm_sq += spec->q[i][j].squaredNorm();
    }
    const double margin = lam_max_sum * rr * rr + std::sqrt(q_norm_sq) * rr + 0.01;
    const double shift = (-margin - base) / static_cast<double>(n);
    for (int i = 0; i < n; ++i) spec->r[i][j] += shift;
  }

  GeneratedProblem out;
  out.spec = spec;
  out.instance = make_instance(spec);

  // Slater check by sampling: every probe inside the target ball must be
  // strictly feasible; the retry budget only covers sampling hiccups since
  // the shift is constructed to succeed.
  SplitMix64 probe_gen(mix64(seed ^ 0x243f6a8885a308d3ULL));
  for (int attempt = 0; attempt < opts.retry_budget; ++attempt) {
    bool ok = true;
    Eigen::VectorXd probe(out.instance.d);
    for (int s = 0; s < opts.slater_samples && ok; ++s) {
      fill_gaussian(StreamKey{probe_gen.next(), 0, 0}, StreamTag::kPrimary, 0,
                    probe);
      const double norm = probe.norm();
      if (norm > 0) probe *= (rr * probe_gen.uniform01_halfopen()) / norm;
      const Eigen::VectorXd sums = coupled_constraint_sum(out.instance, probe);
      if ((sums.array() >= 0.0).any()) ok = false;
    }
    if (ok) return out;
  }
  throw InfeasibleInstance(
      "generate_quadratic: Slater sampling failed within retry budget");
}

InstanceConstants estimate_constants_sampled(const ProblemInstance& inst,
                                             int samples, std::uint64_t seed,
                                             double safety) {
  InstanceConstants cs;
  cs.R_i.resize(inst.n);
  for (int i = 0; i < inst.n; ++i) cs.R_i[i] = inst.sets[i].sup_norm();
  cs.R_bar = std::sqrt(std::inner_product(cs.R_i.begin(), cs.R_i.end(),
                                          cs.R_i.begin(), 0.0));
  SplitMix64 gen(mix64(seed ^ 0x13198a2e03707344ULL));
  Eigen::VectorXd x(inst.d), y(inst.d), gx(inst.m), gy(inst.m);
  auto sample_joint = [&](Eigen::VectorXd& v) {
    fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, v);
    for (int i = 0; i < inst.n; ++i) {
      auto seg = v.segment(inst.offsets[i], inst.dims[i]);
      Eigen::VectorXd proj(inst.dims[i]);
      inst.sets[i].project(seg, proj);
      seg = proj;
    }
  };
  double m0 = 0.0, z = 0.0;
  std::vector<double> mi(inst.n, 0.0);
  for (int s = 0; s < samples; ++s) {
    sample_joint(x);
    sample_joint(y);
    const double dx = (x - y).norm();
    if (dx > 1e-12) {
      for (int i = 0; i < inst.n; ++i) {
        const double ratio =
            std::abs(inst.objective(i, x) - inst.objective(i, y)) / dx;
        m0 = std::max(m0, ratio);
      }
    }
    for (int i = 0; i < inst.n; ++i) {
      inst.constraint_vec(i, inst.block(x, i), gx);
      inst.constraint_vec(i, inst.block(y, i), gy);
      z = std::max(z, gx.norm());
      const double dxi = (inst.block(x, i) - inst.block(y, i)).norm();
      if (dxi > 1e-12) mi[i] = std::max(mi[i], (gx - gy).norm() / dxi);
    }
  }
  cs.M0 = safety * m0;
  cs.Z = safety * z;
  cs.M_i.resize(inst.n);
  double mg_sq = 0.0;
  for (int i = 0; i < inst.n; ++i) {
    cs.M_i[i] = safety * mi[i];
    mg_sq += cs.M_i[i] * cs.M_i[i];
  }
  cs.Mg = std::sqrt(mg_sq);
  // Smoothness cannot be observed from first differences alone; keep any
  // previously known values.
  cs.L0 = inst.consts.L0;
  cs.Lg = inst.consts.Lg;
  cs.L_i = inst.consts.L_i;
  cs.L_max = inst.consts.L_max;
  cs.C = inst.consts.C;
  return cs;
}

void set_dual_bound(ProblemInstance& inst, double c_bound) {
  if (!(c_bound > 0.0) || !std::isfinite(c_bound))
    throw InvalidConstants("set_dual_bound: bound must be positive and finite");
  inst.consts.C = c_bound;
}

}  // namespace mazo
