#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>

#include "mazo/errors.hpp"
#include "mazo/problem.hpp"
#include "mazo/reference.hpp"
#include "mazo/rng.hpp"

using namespace mazo;

namespace {

Eigen::VectorXd random_feasible(const ProblemInstance& inst, SplitMix64& gen) {
  Eigen::VectorXd x(inst.d);
  fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, x);
  x *= 2.0;
  for (int i = 0; i < inst.n; ++i) {
    Eigen::VectorXd proj(inst.dims[i]);
    inst.sets[i].project(x.segment(inst.offsets[i], inst.dims[i]), proj);
    x.segment(inst.offsets[i], inst.dims[i]) = proj;
  }
  return x;
}

}  // namespace

TEST_CASE("global objective and violation") {
  auto generated = generate_quadratic(3, 4, default_dims(4, 8), 2, 0.1, 1.6);
  auto& inst = generated.instance;

  SUBCASE("quadratic instance at the origin averages the offsets") {
    double c_avg = 0.0;
    for (double ci : generated.spec->c) c_avg += ci;
    c_avg /= generated.spec->n;
    CHECK(global_objective(inst, Eigen::VectorXd::Zero(inst.d)) ==
          doctest::Approx(c_avg).epsilon(1e-14));
  }
  SUBCASE("cancelling objectives sum to zero") {
    ProblemInstance two = inst;
    two.n = 2;
    two.d = 2;
    two.m = 0;
    two.dims = {1, 1};
    two.offsets = {0, 1};
    two.objective_all = [](Eigen::Ref<const Eigen::VectorXd> x,
                           Eigen::Ref<Eigen::VectorXd> out) {
      out[0] = x.squaredNorm();
      out[1] = -x.squaredNorm();
    };
    CHECK(global_objective(two, Eigen::Vector2d(1.3, -0.2)) == 0.0);
  }
  SUBCASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(global_objective(inst, Eigen::VectorXd::Zero(inst.d + 1)),
                    DimensionMismatch);
  }
  SUBCASE("positive part norm") {
    ProblemInstance toy = inst;
    toy.m = 2;
    Eigen::Vector2d forced;
    toy.constraint_vec = [&forced](int i, Eigen::Ref<const Eigen::VectorXd>,
                                   Eigen::Ref<Eigen::VectorXd> out) {
      out = (i == 0) ? forced : Eigen::Vector2d::Zero();
    };
    forced = Eigen::Vector2d(3.0, -4.0);
    CHECK(constraint_violation(toy, Eigen::VectorXd::Zero(toy.d)) ==
          doctest::Approx(3.0));
    forced = Eigen::Vector2d(3.0, 4.0);
    CHECK(constraint_violation(toy, Eigen::VectorXd::Zero(toy.d)) ==
          doctest::Approx(5.0));
    forced = Eigen::Vector2d(-1.0, -2.0);
    CHECK(constraint_violation(toy, Eigen::VectorXd::Zero(toy.d)) == 0.0);
  }
}

TEST_CASE("quadratic generator") {
  auto generated =
      generate_quadratic(2024, 15, default_dims(15, 40), 2, 0.1, 1.6);
  const auto& spec = *generated.spec;
  const auto& inst = generated.instance;

  SUBCASE("benchmark-scale shape") {
    CHECK(spec.n == 15);
    CHECK(spec.d == 40);
    CHECK(spec.m == 2);
    CHECK(inst.consts.R_bar == doctest::Approx(2.0 * std::sqrt(15.0)));
  }
  SUBCASE("average curvature is symmetric with spectrum inside the range") {
    const Eigen::MatrixXd a = spec.average_a();
    CHECK((a - a.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a,
                                                      Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= 0.1 - 1e-10);
    CHECK(es.eigenvalues().maxCoeff() <= 1.6 + 1e-10);
  }
  SUBCASE("every agent matrix stays positive definite") {
    for (const auto& ai : spec.A) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ai,
                                                        Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() > 0.0);
    }
  }
  SUBCASE("constraint curvatures lie inside the range") {
    for (int i = 0; i < spec.n; ++i)
      for (int j = 0; j < spec.m; ++j) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            spec.P[i][j], Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues().minCoeff() >= 0.1 - 1e-10);
        CHECK(es.eigenvalues().maxCoeff() <= 1.6 + 1e-10);
      }
  }
  SUBCASE("the origin neighborhood is strictly feasible (Slater)") {
    const Eigen::VectorXd sums =
        coupled_constraint_sum(inst, Eigen::VectorXd::Zero(inst.d));
    CHECK(sums.maxCoeff() < 0.0);
  }
  SUBCASE("sampled Lipschitz ratios never exceed the stored constants") {
    SplitMix64 gen(5);
    Eigen::VectorXd gx(inst.m), gy(inst.m);
    for (int rep = 0; rep < 10000; ++rep) {
      const Eigen::VectorXd x = random_feasible(inst, gen);
      const Eigen::VectorXd y = random_feasible(inst, gen);
      const double dxy = (x - y).norm();
      if (dxy < 1e-12) continue;
      const int i = static_cast<int>(gen.next() % inst.n);
      CHECK(std::abs(inst.objective(i, x) - inst.objective(i, y)) <=
            inst.consts.M0 * dxy * (1.0 + 1e-12));
      inst.constraint_vec(i, inst.block(x, i), gx);
      inst.constraint_vec(i, inst.block(y, i), gy);
      const double dxi = (inst.block(x, i) - inst.block(y, i)).norm();
      if (dxi > 1e-12)
        CHECK((gx - gy).norm() <= inst.consts.M_i[i] * dxi * (1.0 + 1e-12));
      CHECK(gx.norm() <= inst.consts.Z * (1.0 + 1e-12));
    }
  }
  SUBCASE("finite differences match the analytic gradient") {
    SplitMix64 gen(6);
    const double h = 1e-4;
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::VectorXd x = random_feasible(inst, gen);
      const int i = static_cast<int>(gen.next() % inst.n);
      const Eigen::VectorXd analytic = 2.0 * (spec.A[i] * x) + spec.b[i];
      for (int k = 0; k < 5; ++k) {
        const int comp = static_cast<int>(gen.next() % inst.d);
        Eigen::VectorXd e = Eigen::VectorXd::Zero(inst.d);
        e[comp] = h;
        const double fd =
            (inst.objective(i, x + e) - inst.objective(i, x - e)) / (2.0 * h);
        CHECK(fd == doctest::Approx(analytic[comp]).epsilon(1e-5));
      }
    }
  }
  SUBCASE("bad eigenvalue range is a usage error") {
    CHECK_THROWS_AS(generate_quadratic(1, 3, default_dims(3, 6), 1, 0.0, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(generate_quadratic(1, 3, default_dims(3, 6), 1, 2.0, 1.0),
                    ConfigError);
  }
}

TEST_CASE("instance serialization") {
  auto generated = generate_quadratic(77, 5, default_dims(5, 12), 2, 0.1, 1.6);
  const std::string path = "roundtrip_instance_test.json";
  generated.spec->save(path);
  const auto reloaded = QuadraticSpec::load(path);
  auto inst2 = make_instance(std::make_shared<QuadraticSpec>(reloaded));

  SUBCASE("evaluations reproduce bit-exactly") {
    SplitMix64 gen(8);
    Eigen::VectorXd x(generated.instance.d);
    for (int rep = 0; rep < 50; ++rep) {
      fill_gaussian(StreamKey{gen.next(), 0, 0}, StreamTag::kPrimary, 0, x);
      for (int i = 0; i < generated.instance.n; ++i) {
        const double a = generated.instance.objective(i, x);
        const double b = inst2.objective(i, x);
        CHECK(a == b);  // bitwise: same doubles, same arithmetic
        for (int j = 0; j < generated.instance.m; ++j)
          CHECK(generated.instance.constraint(i, j,
                                              generated.instance.block(x, i)) ==
                inst2.constraint(i, j, inst2.block(x, i)));
      }
    }
  }
  SUBCASE("re-serialization is byte-identical") {
    CHECK(generated.spec->to_json_string() == reloaded.to_json_string());
  }
  SUBCASE("same seed regenerates the identical file") {
    auto again = generate_quadratic(77, 5, default_dims(5, 12), 2, 0.1, 1.6);
    CHECK(again.spec->to_json_string() == generated.spec->to_json_string());
  }
  std::remove(path.c_str());
}

TEST_CASE("reference solver") {
  SUBCASE("unconstrained reduction matches the closed-form minimizer") {
    auto generated = generate_quadratic(11, 3, default_dims(3, 6), 0, 0.2, 1.2,
                                        GeneratorOptions{.set_radius = 50.0});
    const auto& spec = *generated.spec;
    const auto sol = solve_reference(generated.instance, 1e-10);
    const Eigen::MatrixXd a = spec.average_a();
    const Eigen::VectorXd b = spec.average_b();
    const Eigen::VectorXd closed = -0.5 * a.ldlt().solve(b);
    CHECK((sol.x_star - closed).norm() <= 1e-7);
    const double f_closed =
        closed.dot(a * closed) + b.dot(closed) + spec.average_c();
    CHECK(sol.f_star == doctest::Approx(f_closed).epsilon(1e-10));
  }
  SUBCASE("binding constraints satisfy KKT and complementary slackness") {
    auto generated = generate_quadratic(13, 4, default_dims(4, 8), 1, 0.1, 1.6);
    auto& inst = generated.instance;
    const double tol = 1e-9;
    const auto sol = solve_reference(inst, tol);
    CHECK(sol.kkt_residual <= tol);
    const Eigen::VectorXd sums = coupled_constraint_sum(inst, sol.x_star);
    CHECK(std::abs(sol.y_star.dot(sums)) <= 1e-6);
    CHECK(sums.maxCoeff() <= 1e-6);  // primal feasibility at the optimum
  }
  SUBCASE("optimal value is invariant to the primal initialization") {
    auto generated = generate_quadratic(17, 4, default_dims(4, 9), 2, 0.1, 1.6);
    const auto base = solve_reference(generated.instance, 1e-9);
    SplitMix64 gen(31);
    const Eigen::VectorXd x0 = random_feasible(generated.instance, gen);
    const auto redo = solve_reference(generated.instance, 1e-9, 200000, x0);
    CHECK(redo.f_star == doctest::Approx(base.f_star).epsilon(1e-7));
  }
  SUBCASE("optimality certificate by feasible sampling") {
    auto generated = generate_quadratic(19, 4, default_dims(4, 8), 2, 0.1, 1.6);
    auto& inst = generated.instance;
    const auto sol = solve_reference(inst, 1e-9);
    SplitMix64 gen(32);
    int feasible_found = 0;
    while (feasible_found < 1000) {
      Eigen::VectorXd x = random_feasible(inst, gen);
      x *= gen.uniform01_halfopen();  // bias toward the feasible interior
      if (constraint_violation(inst, x) > 0.0) continue;
      ++feasible_found;
      CHECK(global_objective(inst, x) >= sol.f_star - 1e-7);
    }
  }
  SUBCASE("tightening the tolerance barely moves the optimal value") {
    auto generated = generate_quadratic(23, 4, default_dims(4, 8), 2, 0.1, 1.6);
    const auto loose = solve_reference(generated.instance, 1e-6);
    const auto tight = solve_reference(generated.instance, 1e-8);
    CHECK(std::abs(loose.f_star - tight.f_star) < 1e-5);
  }
  SUBCASE("black-box instances are rejected") {
    auto generated = generate_quadratic(3, 3, default_dims(3, 6), 1, 0.1, 1.6);
    ProblemInstance blackbox = generated.instance;
    blackbox.quad = nullptr;
    CHECK_THROWS_AS(solve_reference(blackbox, 1e-8), InvalidConstants);
  }
}

TEST_CASE("sampled constants carry the safety factor") {
  auto generated = generate_quadratic(41, 3, default_dims(3, 7), 1, 0.1, 1.6);
  const auto sampled = estimate_constants_sampled(generated.instance, 2000, 9);
  // Sampled ratios under-estimate the true supremum; the safety factor keeps
  // them usable as upper bounds for what was actually sampled.
  CHECK(sampled.M0 > 0.0);
  CHECK(sampled.M0 <= generated.instance.consts.M0 * 1.2);
  CHECK(sampled.Z <= generated.instance.consts.Z * 1.2);
  CHECK(sampled.Mg <= generated.instance.consts.Mg * 1.2);
}
