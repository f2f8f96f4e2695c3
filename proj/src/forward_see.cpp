#include "smpkit/forward_see.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <cmath>

namespace smpkit {

void check_finite(const Eigen::VectorXd& x, std::size_t step, std::size_t path) {
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double v = x[k];
        if (!std::isfinite(v)) {
            throw SimulationDivergedError(step, path, "non-finite coefficient");
        }
        if (std::abs(v) > kDivergenceGuard) {
            throw SimulationDivergedError(step, path, "coefficient exceeds overflow guard");
        }
    }
}

namespace {

void check_initial(const OperatorSpec& op, const InitialState& x0, const BrownianEnsemble& ens) {
    if (!x0.is_shared() && x0.size() != ens.n_paths()) {
        throw DomainError("initial state: per-path list must have one entry per path");
    }
    for (std::size_t p = 0; p < x0.size(); ++p) {
        require_dimension(op, x0.at(p), "initial state");
    }
}

}  // namespace

StateEnsemble simulate_controlled(const Scenario& scenario, const InitialState& x0,
                                  const ControlProcess& control, const BrownianEnsemble& ens) {
    check_initial(scenario.op, x0, ens);
    if (control.control_dim() != scenario.control_dim) {
        throw DomainError("simulate_controlled: control dimension mismatch");
    }
    const TimeGrid& grid = ens.grid();
    const std::size_t n_steps = grid.n_steps();
    const std::size_t n = scenario.n();
    const double dt = grid.dt();
    const Eigen::VectorXd factors = scenario.op.semigroup_factors(dt);

    StateEnsemble out{grid, ens.id(), PathField(ens.n_paths(), n_steps + 1, n),
                      PathField(ens.n_paths(), n_steps, scenario.control_dim)};

    kernels::for_each_path(ens.n_paths(), [&](std::size_t p) {
        Eigen::VectorXd x = x0.at(p);
        check_finite(x, 0, p);
        out.states.at(p, 0) = x;
        for (std::size_t j = 0; j < n_steps; ++j) {
            const double t = grid.t(j);
            const Eigen::VectorXd u = scenario.control_set.project(control.value(p, j, t, x));
            out.controls_used.at(p, j) = u;
            const Eigen::VectorXd a = scenario.drift(t, x, u);
            const Eigen::VectorXd b = scenario.diffusion(t, x, u);
            x = factors.cwiseProduct(x + a * dt + b * ens.increment(p, j));
            check_finite(x, j + 1, p);
            out.states.at(p, j + 1) = x;
        }
    });
    return out;
}

LinearizedStepper::LinearizedStepper(const OperatorSpec& op, const MatrixProcess* J,
                                     const MatrixProcess* K, VectorProcess u, VectorProcess v,
                                     const BrownianEnsemble& ens)
    : J_(J), K_(K), u_(std::move(u)), v_(std::move(v)), ens_(&ens),
      factors_(op.semigroup_factors(ens.grid().dt())), dt_(ens.grid().dt()) {
    for (const MatrixProcess* m : {J, K}) {
        if (m == nullptr) continue;
        if (m->n() != op.n_modes()) {
            throw DomainError("linearized equation: coefficient matrix dimension mismatch");
        }
        if (m->n_times() < ens.n_steps()) {
            throw DomainError("linearized equation: coefficient process has too few steps");
        }
        if (!m->is_deterministic() && m->n_paths() != ens.n_paths()) {
            throw DomainError("linearized equation: coefficient process has wrong path count");
        }
    }
}

void LinearizedStepper::advance(std::size_t path, std::size_t step, Eigen::VectorXd& x, Buffers& b) const {
    b.u.setZero();
    if (u_) u_(path, step, b.u);
    b.v.setZero();
    if (v_) v_(path, step, b.v);
    advance_with(path, step, x, b.u, b.v, b.next);
}

void LinearizedStepper::advance_with(std::size_t path, std::size_t step, Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                     Eigen::VectorXd& next) const {
    const double dw = ens_->increment(path, step);
    next = x + dt_ * u + dw * v;
    if (J_ != nullptr) next.noalias() += dt_ * (J_->at(path, step) * x);
    if (K_ != nullptr) next.noalias() += dw * (K_->at(path, step) * x);
    x = factors_.cwiseProduct(next);
    check_finite(x, step + 1, path);
}

StateEnsemble simulate_linearized(const OperatorSpec& op, const MatrixProcess& J,
                                  const MatrixProcess& K, std::size_t t0_index,
                                  const InitialState& xi, const VectorProcess& u,
                                  const VectorProcess& v, const BrownianEnsemble& ens) {
    check_initial(op, xi, ens);
    if (t0_index > ens.n_steps()) {
        throw DomainError("simulate_linearized: t0_index outside the grid");
    }
    const LinearizedStepper stepper(op, &J, &K, u, v, ens);
    StateEnsemble out{ens.grid(), ens.id(), PathField(ens.n_paths(), ens.n_steps() + 1, op.n_modes()),
                      PathField()};
    kernels::for_each_path(ens.n_paths(), [&](std::size_t p) {
        stepper.run(p, t0_index, xi.at(p),
                    [&](std::size_t j, const Eigen::VectorXd& x) { out.states.at(p, j) = x; });
    });
    return out;
}

StateEnsemble simulate_linear_test(const OperatorSpec& op, std::size_t t0_index,
                                   const InitialState& eta, const VectorProcess& v1,
                                   const VectorProcess& v2, const BrownianEnsemble& ens) {
    check_initial(op, eta, ens);
    if (t0_index > ens.n_steps()) {
        throw DomainError("simulate_linear_test: t0_index outside the grid");
    }
    const LinearizedStepper stepper(op, nullptr, nullptr, v1, v2, ens);
    StateEnsemble out{ens.grid(), ens.id(), PathField(ens.n_paths(), ens.n_steps() + 1, op.n_modes()),
                      PathField()};
    kernels::for_each_path(ens.n_paths(), [&](std::size_t p) {
        stepper.run(p, t0_index, eta.at(p),
                    [&](std::size_t j, const Eigen::VectorXd& x) { out.states.at(p, j) = x; });
    });
    return out;
}

std::vector<double> path_costs(const Scenario& scenario, const StateEnsemble& trajectory) {
    const TimeGrid& grid = trajectory.grid;
    const std::size_t n_paths = trajectory.states.n_paths();
    const double dt = grid.dt();
    std::vector<double> costs(n_paths, 0.0);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        double c = 0.0;
        for (std::size_t j = 0; j < grid.n_steps(); ++j) {
            const Eigen::VectorXd x = trajectory.states.at(p, j);
            const Eigen::VectorXd u = trajectory.controls_used.at(p, j);
            c += scenario.running_cost(grid.t(j), x, u) * dt;
        }
        c += scenario.terminal_cost(trajectory.states.at(p, grid.n_steps()));
        costs[p] = c;
    });
    return costs;
}

CostEstimate estimate_cost(const Scenario& scenario, const StateEnsemble& trajectory) {
    const auto costs = path_costs(scenario, trajectory);
    const auto m = kernels::moments(costs);
    return {m.mean, m.std_error};
}

CostEstimate estimate_cost(const Scenario& scenario, const InitialState& x0,
                           const ControlProcess& control, const BrownianEnsemble& ens) {
    return estimate_cost(scenario, simulate_controlled(scenario, x0, control, ens));
}

ControlProcess realized_control(const StateEnsemble& trajectory) {
    if (trajectory.controls_used.empty()) {
        throw DomainError("realized_control: trajectory carries no controls");
    }
    return ControlProcess::open_loop_per_path(trajectory.controls_used);
}

}  // namespace smpkit
