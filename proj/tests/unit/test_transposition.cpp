#include "helpers.hpp"

#include "smpkit/error.hpp"
#include "smpkit/scenarios.hpp"
#include "smpkit/transposition.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace smpkit;
using testing::vec;

namespace {

/// Linear costs g = <c, x>, h = <d, x> and additive noise: the adjoint is
/// deterministic, y(t) = -S(T - t) d - int_t^T S(s - t) c ds.
Scenario linear_cost_scenario(const OperatorSpec& op, const Eigen::VectorXd& c, const Eigen::VectorXd& d) {
    Scenario sc = testing::linear_scenario(op, Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2), vec({0.3, 0.2}));
    sc.running_cost = [c](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) { return c.dot(x); };
    sc.terminal_cost = [d](const Eigen::VectorXd& x) { return d.dot(x); };
    return sc;
}

struct Setup {
    Scenario sc;
    BrownianEnsemble ens;
    StateEnsemble traj;
    AdjointPair pair;
    PathField f;
};

Setup setup(const Scenario& sc, std::size_t steps, std::size_t paths, std::uint64_t seed) {
    auto ens = sample_brownian(TimeGrid(0.0, 1.0, steps), paths, seed);
    auto traj = simulate_controlled(sc, Eigen::VectorXd(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(sc.n()))),
                                    ControlProcess::constant(vec({0.5}), steps), ens);
    auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    auto f = driver_values(first_adjoint_driver(sc, traj), pair);
    return {sc, std::move(ens), std::move(traj), std::move(pair), std::move(f)};
}

VectorProcess scaled(const VectorProcess& v, double c) {
    return [v, c](std::size_t p, std::size_t j, Eigen::Ref<Eigen::VectorXd> out) {
        v(p, j, out);
        out *= c;
    };
}

}  // namespace

TEST_CASE("identity report arithmetic") {
    const auto r = make_identity_report("x", {1.0, 2.0, 3.0}, {1.0, 1.0, 1.0}, 0.01, {3.0, 10.0});
    CHECK(r.lhs == 2.0);
    CHECK(r.rhs == 1.0);
    CHECK(r.residual == 1.0);
    // mean of |lhs| + |rhs| is 3, so the round-off floor adds 3e-12
    CHECK(r.bias_budget == Catch::Approx(0.1 + 3e-12).epsilon(1e-15));
    CHECK(r.pass == (1.0 <= 3.0 * r.std_error + r.bias_budget));
    CHECK_THROWS_AS(make_identity_report("x", {}, {}, 0.01, {}), DomainError);
}

TEST_CASE("first-order identity on zero data is exactly zero") {
    const auto op = make_dirichlet_laplacian(2, 1.0);
    const auto s = setup(linear_cost_scenario(op, vec({0, 0}), vec({0, 0})), 50, 300, 1);
    const auto test = random_first_test(0, 5, s.traj, s.ens);
    const auto r = verify_first_identity(s.pair, op, s.f, test, s.ens);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.residual == 0.0);
    CHECK(r.pass);
    FirstOrderTest zero_test{10, vec({0.0, 0.0}), {}, {}};
    const auto s2 = setup(linear_cost_scenario(op, vec({1, 2}), vec({-1, 0.5})), 50, 300, 1);
    const auto r2 = verify_first_identity(s2.pair, op, s2.f, zero_test, s2.ens);
    CHECK(r2.residual == 0.0);
}

TEST_CASE("first-order identity with a deterministic adjoint") {
    const auto op = make_dirichlet_laplacian(2, 1.0);
    const auto s = setup(linear_cost_scenario(op, vec({1.0, -0.5}), vec({0.7, 0.2})), 200, 4000, 2);
    for (std::size_t i = 0; i < 8; ++i) {
        const auto r = verify_first_identity(s.pair, op, s.f, random_first_test(i, 3, s.traj, s.ens), s.ens,
                                             PassRule{3.0, 1.0});
        CHECK(r.pass);
    }
}

TEST_CASE("localized forcing recovers y at one step") {
    const auto sc = make_heat_scenario(3, 1);
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 100), 4000, 3);
    const auto traj = simulate_controlled(sc, Eigen::VectorXd(vec({1.0, 0.5, 0.25})),
                                          ControlProcess::constant(vec({1.0}), 100), ens);
    const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    const auto f = driver_values(first_adjoint_driver(sc, traj), pair);
    for (std::size_t k : {10u, 50u, 90u}) {
        for (Eigen::Index mode = 0; mode < 2; ++mode) {
            FirstOrderTest test{0, vec({0.0, 0.0, 0.0}),
                                [k, mode](std::size_t, std::size_t j, Eigen::Ref<Eigen::VectorXd> out) {
                                    if (j == k) out[mode] = 1.0;
                                },
                                {}};
            const auto r = verify_first_identity(pair, sc.op, f, test, ens);
            std::vector<double> y(ens.n_paths());
            double mean = 0.0;
            for (std::size_t p = 0; p < ens.n_paths(); ++p) mean += pair.y.at(p, k)[mode];
            mean /= static_cast<double>(ens.n_paths());
            CHECK(r.rhs / ens.grid().dt() == Catch::Approx(mean).epsilon(1e-12));
            // The left side only sees z, which is deterministic here; it recovers E y_k.
            CHECK(std::abs(r.lhs - r.rhs) / ens.grid().dt() <= 0.02 * std::abs(mean) + 0.01);
        }
    }
}

TEST_CASE("first-order identity is bilinear in the test data") {
    const auto sc = make_heat_scenario(2, 1);
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 40), 500, 4);
    const auto traj = simulate_controlled(sc, Eigen::VectorXd(vec({1.0, 0.5})), ControlProcess::constant(vec({1.0}), 40), ens);
    const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    const auto f = driver_values(first_adjoint_driver(sc, traj), pair);
    const auto t = random_first_test(1, 9, traj, ens);
    std::vector<SpectralVector> eta2;
    for (std::size_t p = 0; p < ens.n_paths(); ++p) eta2.push_back(2.0 * t.eta.at(p));
    const FirstOrderTest t2{t.t_index, InitialState(eta2), scaled(t.v1, 2.0), scaled(t.v2, 2.0)};
    const auto r1 = verify_first_identity(pair, sc.op, f, t, ens);
    const auto r2 = verify_first_identity(pair, sc.op, f, t2, ens);
    CHECK(r2.lhs == 2.0 * r1.lhs);
    CHECK(r2.rhs == 2.0 * r1.rhs);
}

TEST_CASE("mixing ensembles is rejected") {
    const auto sc = make_heat_scenario(2, 1);
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 40), 500, 4);
    const auto other = sample_brownian(TimeGrid(0.0, 1.0, 40), 500, 5);
    const auto traj = simulate_controlled(sc, Eigen::VectorXd(vec({1.0, 0.5})), ControlProcess::constant(vec({1.0}), 40), ens);
    const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    const auto f = driver_values(first_adjoint_driver(sc, traj), pair);
    CHECK_THROWS_AS(verify_first_identity(pair, sc.op, f, random_first_test(0, 1, traj, ens), other), IdentityInvalidError);
    const auto data = second_order_data(sc, traj, pair);
    const auto sa = solve_second_adjoint(sc.op, data, traj, ens, RegressionBasis());
    CHECK_THROWS_AS(verify_second_identity(sa, sc.op, data, random_second_test(0, 1, traj, ens), other),
                    IdentityInvalidError);
}

TEST_CASE("random test data") {
    const auto sc = make_heat_scenario(2, 1);
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 40), 50, 4);
    const auto traj = simulate_controlled(sc, Eigen::VectorXd(vec({1.0, 0.5})), ControlProcess::constant(vec({1.0}), 40), ens);
    CHECK(identity_time_grid(40) == std::vector<std::size_t>{0, 10, 20, 30});
    for (std::size_t i = 0; i < 8; ++i) {
        const auto a = random_first_test(i, 3, traj, ens);
        const auto b = random_first_test(i, 3, traj, ens);
        CHECK(a.t_index == identity_time_grid(40)[i % 4]);
        CHECK(a.eta.at(7) == b.eta.at(7));
        Eigen::VectorXd va(2), vb(2);
        a.v1(3, 25, va);
        b.v1(3, 25, vb);
        CHECK(va == vb);
    }
    const auto c = random_first_test(0, 4, traj, ens);
    CHECK(c.eta.at(0) != random_first_test(0, 3, traj, ens).eta.at(0));
}

TEST_CASE("second-order identity on zero test data") {
    const auto sc = make_heat_scenario(2, 1);
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 40), 500, 4);
    const auto traj = simulate_controlled(sc, Eigen::VectorXd(vec({1.0, 0.5})), ControlProcess::constant(vec({1.0}), 40), ens);
    const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    const auto data = second_order_data(sc, traj, pair);
    const auto sa = solve_second_adjoint(sc.op, data, traj, ens, RegressionBasis());
    const SecondOrderTest zero{20, vec({0.0, 0.0}), vec({0.0, 0.0}), {}, {}, {}, {}};
    const auto r = verify_second_identity(sa, sc.op, data, zero, ens);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.pass);
}

TEST_CASE("second-order reduction against the Lyapunov oracle") {
    const auto sc = make_heat_scenario(4, 2);
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 200), 4000, 6);
    const auto traj = simulate_controlled(sc, Eigen::VectorXd(vec({1.0, 0.5, 1.0 / 3, 0.25})),
                                          ControlProcess::constant(vec({1.0, 1.0}), 200), ens);
    const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    const auto data = second_order_data(sc, traj, pair);
    REQUIRE(data.is_deterministic());
    const auto P = lyapunov_oracle(sc.op, data.J, data.K, data.F, data.terminal.at(0, 0), ens.grid());
    const SecondOrderAdjoint oracle{ens.grid(), ens.id(), MatrixProcess::deterministic(P), MatrixProcess::zero(4, 200), 0.0, {}};
    for (std::size_t i = 0; i < 4; ++i) {
        auto test = random_second_test(i, 11, traj, ens);
        test.u1 = test.u2 = test.v1 = test.v2 = nullptr;
        const auto r = verify_second_identity(oracle, sc.op, data, test, ens, PassRule{3.0, 3.0});
        CHECK(r.pass);
    }
}

TEST_CASE("scalar second-order identity: residual shrinks over three refinement levels") {
    const auto [sc, lq] = make_lq_scalar();
    std::vector<double> sums;
    for (auto [steps, paths] : {std::pair<std::size_t, std::size_t>{50, 1000}, {100, 4000}, {200, 16000}}) {
        const auto ens = sample_brownian(TimeGrid(0.0, 1.0, steps), paths, 12);
        const auto traj = simulate_controlled(sc, lq.x0, riccati_oracle(lq, ens.grid()).feedback(), ens);
        const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
        const auto data = second_order_data(sc, traj, pair);
        const auto sa = solve_second_adjoint(sc.op, data, traj, ens, RegressionBasis());
        double mean_abs = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            mean_abs += std::abs(verify_second_identity(sa, sc.op, data, random_second_test(i, 13, traj, ens), ens).residual);
        }
        sums.push_back(mean_abs);
    }
    // Adjacent levels can swap under Monte Carlo noise; the coarse-to-fine drop cannot.
    CHECK(sums[2] < 0.5 * sums[0]);
    CHECK(std::min(sums[1], sums[2]) < sums[0]);
}

TEST_CASE("Lipschitz probe") {
    const auto sc = make_cubic_scalar();
    const auto ens = sample_brownian(TimeGrid(0.0, 1.0, 100), 4000, 14);
    const auto traj = simulate_controlled(sc, vec({1.0}), ControlProcess::constant(vec({-0.5}), 100), ens);
    const auto pair = solve_first_adjoint(sc, traj, ens, RegressionBasis());
    const auto data = second_order_data(sc, traj, pair);
    const auto dir = MatrixProcess::constant(Eigen::MatrixXd::Ones(1, 1), 100);
    std::vector<VectorProcess> probes{
        [](std::size_t, std::size_t, Eigen::Ref<Eigen::VectorXd> o) { o[0] = 1.0; },
        [&ens](std::size_t p, std::size_t j, Eigen::Ref<Eigen::VectorXd> o) { o[0] = ens.level(p, j); },
    };
    const auto zero = lipschitz_probe(sc.op, data, dir, {0.0}, probes, traj, ens, RegressionBasis());
    CHECK(zero.rows[0].max_discrepancy == 0.0);

    const auto rep = lipschitz_probe(sc.op, data, dir, {0.2, 0.1, 0.05}, probes, traj, ens, RegressionBasis());
    CHECK(rep.pass);
    CHECK(rep.spread <= 2.0);

    SecondOrderData doubled = data;
    doubled.F = data.F.scaled(2.0);
    doubled.terminal = data.terminal.scaled(2.0);
    const auto rep2 = lipschitz_probe(sc.op, doubled, dir, {0.2, 0.1, 0.05}, probes, traj, ens, RegressionBasis());
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(rep2.rows[i].max_discrepancy <= 2.0 * rep.rows[i].max_discrepancy * (1.0 + 1e-9));
    }
    CHECK_THROWS_AS(lipschitz_probe(sc.op, data, dir, {0.1}, {}, traj, ens, RegressionBasis()), DomainError);
}
