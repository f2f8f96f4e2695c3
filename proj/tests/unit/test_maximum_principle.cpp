#include "helpers.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"
#include "smpkit/maximum_principle.hpp"
#include "smpkit/scenarios.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace smpkit;
using testing::vec;

namespace {

struct LqRun {
    Scenario sc;
    LqParams lq;
    TimeGrid grid;
    BrownianEnsemble ens;
    OracleBundle oracle;
    StateEnsemble traj;
    AdjointPair first;
};

LqRun lq_run(std::size_t steps, std::size_t paths, std::uint64_t seed, bool optimal = true) {
    auto [sc, lq] = make_lq_scalar();
    const TimeGrid grid(0.0, 1.0, steps);
    auto ens = sample_brownian(grid, paths, seed);
    auto oracle = riccati_oracle(lq, grid);
    const ControlProcess control = optimal ? oracle.feedback() : ControlProcess::constant(vec({0.0}), steps);
    auto traj = simulate_controlled(sc, lq.x0, control, ens);
    auto first = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    return {std::move(sc), std::move(lq), grid, std::move(ens), std::move(oracle), std::move(traj), std::move(first)};
}

}  // namespace

TEST_CASE("Hamiltonian") {
    const auto [sc, lq] = make_lq_scalar(0.0);
    CHECK(hamiltonian(sc, 0.0, vec({1.0}), vec({0.0}), vec({2.0}), vec({0.0})) == -0.5);
    const double h1 = hamiltonian(sc, 0.3, vec({0.5}), vec({1.5}), vec({2.0}), vec({1.0}));
    const double h2 = hamiltonian(sc, 0.3, vec({0.5}), vec({1.5}), vec({4.0}), vec({1.0}));
    CHECK(h2 - h1 == Catch::Approx(2.0 * 1.5).epsilon(1e-14));
    CHECK_THROWS_AS(hamiltonian(sc, 0.0, vec({1.0}), vec({6.0}), vec({2.0}), vec({0.0})), DomainError);

    Scenario zero = testing::linear_scenario(OperatorSpec({0.0}), Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd::Zero(1, 1),
                                             vec({0.0}));
    zero.drift = [](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1).eval(); };
    CHECK(hamiltonian(zero, 0.0, vec({3.0}), vec({1.0}), vec({2.0}), vec({5.0})) == 0.0);
}

TEST_CASE("convex gradient") {
    auto run = lq_run(200, 20000, 1);
    SECTION("vanishes when g_u = a_u^T y + b_u^T Y") {
        AdjointPair pair = run.first;
        for (std::size_t p = 0; p < run.ens.n_paths(); ++p) {
            for (std::size_t j = 0; j < 200; ++j) pair.y.at(p, j) = run.traj.controls_used.at(p, j);
        }
        const Eigen::MatrixXd g = convex_gradient(run.sc, 37, run.traj, pair);
        CHECK(g.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("small at the Riccati optimum") {
        const PathField g = gradient_field(run.sc, run.traj, run.first);
        double gg = 0.0, uu = 0.0;
        for (std::size_t p = 0; p < run.ens.n_paths(); ++p) {
            for (std::size_t j = 0; j < 200; ++j) {
                gg += g.at(p, j).squaredNorm();
                uu += run.traj.controls_used.at(p, j).squaredNorm();
            }
        }
        CHECK(std::sqrt(gg / uu) <= 0.05);
        const Eigen::MatrixXd at_step = convex_gradient(run.sc, 100, run.traj, run.first);
        for (std::size_t p = 0; p < 10; ++p) CHECK(at_step(static_cast<Eigen::Index>(p), 0) == g.at(p, 100)[0]);
    }
    SECTION("nonconvex control set") {
        Scenario grid_sc = run.sc;
        grid_sc.control_set = ControlSet::finite_grid({vec({-1.0}), vec({0.0}), vec({1.0})});
        CHECK_THROWS_AS(convex_gradient(grid_sc, 0, run.traj, run.first), WrongTheoremError);
    }
}

TEST_CASE("suboptimal zero control: the gradient points toward the optimum") {
    auto run = lq_run(200, 20000, 2, false);
    const PathField g = gradient_field(run.sc, run.traj, run.first);
    std::vector<double> pairing(run.ens.n_paths(), 0.0);
    for (std::size_t p = 0; p < run.ens.n_paths(); ++p) {
        for (std::size_t j = 0; j < 200; ++j) {
            const Eigen::VectorXd u_star = run.oracle.control_at(j, run.traj.states.at(p, j));
            pairing[p] += g.at(p, j).dot(u_star) * run.grid.dt();
        }
    }
    const auto m = kernels::moments(pairing);
    CHECK(m.mean > 3.0 * m.std_error);
}

TEST_CASE("spike functional") {
    auto run = lq_run(100, 4000, 3);
    const auto data = second_order_data(run.sc, run.traj, run.first);
    const auto sa = solve_second_adjoint(run.sc.op, data, run.traj, run.ens, RegressionBasis());
    SECTION("zero at the reference control") {
        const auto fixed = lq_run(100, 500, 3, false);
        const auto d0 = second_order_data(fixed.sc, fixed.traj, fixed.first);
        const auto s0 = solve_second_adjoint(fixed.sc.op, d0, fixed.traj, fixed.ens, RegressionBasis());
        for (double v : spike_functional(fixed.sc, 40, vec({0.0}), fixed.traj, fixed.first, s0)) CHECK(v == 0.0);
    }
    SECTION("diffusion free of u: Hamiltonian difference") {
        std::mt19937_64 gen(1);
        std::uniform_real_distribution<double> unif(-5.0, 5.0);
        for (int trial = 0; trial < 10; ++trial) {
            const Eigen::VectorXd u = vec({unif(gen)});
            const std::size_t j = static_cast<std::size_t>(trial * 9);
            const auto s = spike_functional(run.sc, j, u, run.traj, run.first, sa);
            for (std::size_t p = 0; p < run.ens.n_paths(); p += 397) {
                const Eigen::VectorXd x = run.traj.states.at(p, j);
                const Eigen::VectorXd y = run.first.y.at(p, j), Y = run.first.Y.at(p, j);
                const double t = run.grid.t(j);
                const double expect = hamiltonian(run.sc, t, x, run.traj.controls_used.at(p, j), y, Y) -
                                      hamiltonian(run.sc, t, x, u, y, Y);
                CHECK(std::abs(s[p] - expect) <= 1e-12 * (1.0 + std::abs(expect)));
            }
        }
    }
    SECTION("argmax over u is invariant under positive scaling of the adjoints") {
        AdjointPair scaled = run.first;
        for (auto& v : scaled.y.raw()) v *= 3.0;
        for (auto& v : scaled.Y.raw()) v *= 3.0;
        SecondOrderAdjoint sa3 = sa;
        sa3.P = sa.P.scaled(3.0);
        sa3.Q = sa.Q.scaled(3.0);
        // Scaling the adjoints does not scale g, so compare on a scenario with g = 0.
        Scenario no_cost = run.sc;
        no_cost.running_cost = [](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return 0.0; };
        no_cost.derivatives.cost_x.reset();
        no_cost.derivatives.cost_u.reset();
        no_cost.derivatives.cost_xx.reset();
        const auto u_grid = run.sc.control_set.enumerate(21);
        for (std::size_t j : {0u, 50u, 99u}) {
            std::vector<double> a, b;
            for (const auto& u : u_grid) {
                a.push_back(kernels::moments(spike_functional(no_cost, j, u, run.traj, run.first, sa)).mean);
                b.push_back(kernels::moments(spike_functional(no_cost, j, u, run.traj, scaled, sa3)).mean);
            }
            for (std::size_t i = 0; i < a.size(); ++i) CHECK(b[i] == Catch::Approx(3.0 * a[i]).epsilon(1e-12));
            CHECK(std::max_element(a.begin(), a.end()) - a.begin() == std::max_element(b.begin(), b.end()) - b.begin());
        }
    }
    SECTION("outside the control set") {
        CHECK_THROWS_AS(spike_functional(run.sc, 0, vec({7.0}), run.traj, run.first, sa), DomainError);
    }
}

TEST_CASE("maximum-principle condition checks") {
    const auto u_grid = make_lq_scalar().first.control_set.enumerate(21);
    SECTION("holds at the optimum") {
        auto run = lq_run(200, 10000, 4);
        const auto data = second_order_data(run.sc, run.traj, run.first);
        const auto sa = solve_second_adjoint(run.sc.op, data, run.traj, run.ens, RegressionBasis());
        const auto rep = check_condition(run.sc, run.traj, run.first, sa, u_grid, uniform_time_grid(200, 8));
        CHECK(rep.entries.size() == 21 * 8);
        CHECK(rep.pass);
        // The discrete adjoint sits O(dt) away from the continuous feedback and the
        // entry scales that gap by |u - ubar| <= 6.
        const auto conv = check_convex_condition(run.sc, run.traj, run.first, u_grid, uniform_time_grid(200, 8),
                                                 PassRule{3.0, 6.0});
        CHECK(conv.condition == "convex");
        CHECK(conv.pass);
        CHECK_THROWS_AS(check_condition(run.sc, run.traj, run.first, sa, {}, uniform_time_grid(200, 8)), DomainError);
        CHECK_THROWS_AS(check_condition(run.sc, run.traj, run.first, sa, u_grid, {}), DomainError);
    }
    SECTION("fails for a perturbed control, located early") {
        auto [sc, lq] = make_lq_scalar();
        const TimeGrid grid(0.0, 1.0, 200);
        const auto ens = sample_brownian(grid, 10000, 5);
        const auto oracle = riccati_oracle(lq, grid);
        const auto control = ControlProcess::feedback(
            [oracle, grid](std::size_t j, double, const Eigen::VectorXd& x) {
                Eigen::VectorXd u = oracle.control_at(j, x);
                if (grid.t(j) < 0.25) u[0] += 0.5;
                return u;
            },
            1);
        const auto traj = simulate_controlled(sc, lq.x0, control, ens);
        const auto first = solve_first_adjoint(sc, traj, ens, RegressionBasis());
        const auto data = second_order_data(sc, traj, first);
        const auto sa = solve_second_adjoint(sc.op, data, traj, ens, RegressionBasis());
        const auto rep = check_condition(sc, traj, first, sa, u_grid, uniform_time_grid(200, 8));
        CHECK_FALSE(rep.pass);
        CHECK(rep.entries[rep.worst].t <= 0.25);
        CHECK(rep.max_violation > rep.entries[rep.worst].tolerance);
    }
    CHECK(uniform_time_grid(200, 8) == std::vector<std::size_t>{0, 25, 50, 75, 100, 125, 150, 175});
}

TEST_CASE("projected gradient") {
    auto [sc, lq] = make_lq_scalar();
    const TimeGrid grid(0.0, 1.0, 100);
    const auto ens = sample_brownian(grid, 5000, 6);
    const auto oracle = riccati_oracle(lq, grid);
    const RegressionBasis basis;
    SECTION("from zero reaches the oracle value") {
        const auto res = projected_gradient(sc, lq.x0, ControlProcess::constant(vec({0.0}), 100), {}, 200, ens, basis);
        CHECK(res.history.size() <= 201);
        CHECK(std::abs(res.history.back().J - oracle.value_at(lq.x0)) <= 0.02 * oracle.value_at(lq.x0));
        CHECK(res.history.back().J < res.history.front().J);
    }
    SECTION("from the optimum stops after at most one effective step") {
        const auto res = projected_gradient(sc, lq.x0, oracle.feedback(), {}, 200, ens, basis);
        CHECK(res.history.size() <= 2);
    }
    SECTION("zero step leaves the control unchanged") {
        const auto res = projected_gradient(sc, lq.x0, ControlProcess::constant(vec({0.3}), 100), StepRule{0.0, 0.1}, 20,
                                            ens, basis);
        CHECK(res.stop_reason == "step_norm");
        for (const auto& h : res.history) CHECK(h.J == res.history.front().J);
        for (double v : res.control.raw()) CHECK(v == 0.3);
    }
    SECTION("divergent step is an error") {
        auto [wide, lq_wide] = make_lq_scalar(0.3, 1e6);
        CHECK_THROWS_AS(projected_gradient(wide, lq_wide.x0, ControlProcess::constant(vec({0.0}), 100), StepRule{3.0, 0.1},
                                           50, ens, basis),
                        StepRuleError);
    }
    SECTION("nonconvex control set") {
        Scenario g = sc;
        g.control_set = ControlSet::finite_grid({vec({-1.0}), vec({1.0})});
        CHECK_THROWS_AS(projected_gradient(g, lq.x0, ControlProcess::constant(vec({1.0}), 100), {}, 5, ens, basis),
                        WrongTheoremError);
    }
}

TEST_CASE("gradient consistency in random directions") {
    auto run = lq_run(100, 5000, 7);
    std::mt19937_64 gen(8);
    std::normal_distribution<double> normal;
    for (int d = 0; d < 5; ++d) {
        const double c1 = normal(gen), c2 = normal(gen);
        PathField dir(run.ens.n_paths(), 100, 1);
        for (std::size_t p = 0; p < run.ens.n_paths(); ++p) {
            for (std::size_t j = 0; j < 100; ++j) {
                dir.at(p, j)[0] = c1 * std::sin(3.0 * run.grid.t(j)) + c2 * run.traj.states.at(p, j)[0];
            }
        }
        const auto r = gradient_consistency(run.sc, run.lq.x0, run.traj.controls_used, dir, 0.1, run.ens,
                                            RegressionBasis(), PassRule{3.0, 1.0});
        CHECK(r.pass);
    }
}

TEST_CASE("spike experiment") {
    auto [sc, lq] = make_lq_scalar();
    const TimeGrid grid(0.0, 1.0, 200);
    const auto ens = sample_brownian(grid, 10000, 9);
    const RegressionBasis basis;
    const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
    SECTION("u_alt equal to the reference control") {
        const auto t = spike_experiment(sc, lq.x0, ControlProcess::constant(vec({0.3}), 200), vec({0.3}), 1.0 / 3, eps,
                                        ens, basis);
        for (const auto& r : t.rows) {
            CHECK(r.delta_J == 0.0);
            CHECK(r.predicted == 0.0);
        }
    }
    SECTION("remainder is o(eps) at the optimum") {
        const auto t = spike_experiment(sc, lq.x0, riccati_oracle(lq, grid).feedback(), vec({0.0}), 1.0 / 3, eps, ens,
                                        basis);
        CHECK(t.rows.size() == 4);
        CHECK(t.inversions <= 1);
        CHECK(t.rows.back().remainder_over_epsilon < t.rows.front().remainder_over_epsilon);
        for (const auto& r : t.rows) CHECK(r.delta_J > 0.0);
    }
    SECTION("improvement exists for a suboptimal control") {
        const auto t = spike_experiment(sc, lq.x0, ControlProcess::constant(vec({0.0}), 200), vec({-1.0}), 0.0, eps, ens,
                                        basis);
        CHECK(t.rows.front().delta_J < -3.0 * t.rows.front().delta_J_std_error);
    }
    SECTION("bad eps lists") {
        const auto u = ControlProcess::constant(vec({0.0}), 200);
        CHECK_THROWS_AS(spike_experiment(sc, lq.x0, u, vec({0.0}), 0.3, {0.1, 0.2}, ens, basis), DomainError);
        CHECK_THROWS_AS(spike_experiment(sc, lq.x0, u, vec({0.0}), 0.3, {0.1, 0.0}, ens, basis), DomainError);
        CHECK_THROWS_AS(spike_experiment(sc, lq.x0, u, vec({0.0}), 0.9, {0.2}, ens, basis), DomainError);
    }
}
