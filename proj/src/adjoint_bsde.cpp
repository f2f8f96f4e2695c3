#include "smpkit/adjoint_bsde.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

namespace smpkit {

BsdeSolution solve_bsde(const Eigen::VectorXd& factors, const PathField& terminal,
                        const BsdeDriver& driver, const PathField& conditioning,
                        const BrownianEnsemble& ens, const RegressionBasis& basis,
                        BackwardSplitting splitting) {
    const std::size_t n_paths = ens.n_paths();
    const std::size_t n_steps = ens.n_steps();
    const auto dim = static_cast<std::size_t>(factors.size());
    const auto d = static_cast<Eigen::Index>(dim);
    if (terminal.n_paths() != n_paths || terminal.dim() != dim || terminal.n_times() < 1) {
        throw DomainError("solve_bsde: terminal data shape mismatch");
    }
    if (conditioning.n_paths() != n_paths || conditioning.n_times() < n_steps + 1) {
        throw DomainError("solve_bsde: conditioning states do not match the ensemble");
    }
    basis.check_overfit(conditioning.dim(), n_paths);

    const double dt = ens.grid().dt();
    const bool propagate_first = splitting == BackwardSplitting::kPropagateThenDrive;
    BsdeSolution sol{PathField(n_paths, n_steps + 1, dim), PathField(n_paths, n_steps, dim)};
    for (std::size_t p = 0; p < n_paths; ++p) sol.y.at(p, n_steps) = terminal.at(p, 0);

    Eigen::MatrixXd targets(static_cast<Eigen::Index>(n_paths), 2 * d);
    for (std::size_t jj = n_steps; jj-- > 0;) {
        const std::size_t j = jj;
        kernels::for_each_path(n_paths, [&](std::size_t p) {
            const auto next = sol.y.at(p, j + 1);
            const double dw = ens.increment(p, j);
            const auto row = static_cast<Eigen::Index>(p);
            if (propagate_first) {
                const Eigen::VectorXd moved = factors.cwiseProduct(next);
                targets.row(row).head(d) = moved.transpose();
                targets.row(row).tail(d) = (moved * (dw / dt)).transpose();
            } else {
                targets.row(row).head(d) = next.transpose();
                targets.row(row).tail(d) = (next * (dw / dt)).transpose();
            }
        });
        const Eigen::MatrixXd fitted =
            conditional_expectation(basis.design(conditioning, j), targets, basis.ridge());
        kernels::for_each_path(n_paths, [&](std::size_t p) {
            const auto row = static_cast<Eigen::Index>(p);
            const Eigen::VectorXd ey = fitted.row(row).head(d).transpose();
            const Eigen::VectorXd z = fitted.row(row).tail(d).transpose();
            Eigen::VectorXd f = Eigen::VectorXd::Zero(d);
            driver(p, j, ey, z, f);
            if (propagate_first) {
                sol.y.at(p, j) = ey - f * dt;
            } else {
                sol.y.at(p, j) = factors.cwiseProduct(ey - f * dt);
            }
            sol.Y.at(p, j) = z;
            check_finite(sol.y.at(p, j), j, p);
        });
    }
    return sol;
}

BsdeDriver first_adjoint_driver(const Scenario& scenario, const StateEnsemble& trajectory) {
    if (trajectory.controls_used.empty()) {
        throw DomainError("first_adjoint_driver: trajectory carries no controls");
    }
    const TimeGrid grid = trajectory.grid;
    // Shared Jacobians per step when they are state- and control-free.
    std::vector<Eigen::MatrixXd> ax_cache;
    std::vector<Eigen::MatrixXd> bx_cache;
    if (scenario.second_order_data_deterministic) {
        for (std::size_t j = 0; j < grid.n_steps(); ++j) {
            const Eigen::VectorXd x = trajectory.states.at(0, j);
            const Eigen::VectorXd u = trajectory.controls_used.at(0, j);
            ax_cache.push_back(scenario.drift_x(grid.t(j), x, u));
            bx_cache.push_back(scenario.diffusion_x(grid.t(j), x, u));
        }
    }
    return [&scenario, &trajectory, grid, ax_cache = std::move(ax_cache),
            bx_cache = std::move(bx_cache)](std::size_t p, std::size_t j, const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& Y, Eigen::Ref<Eigen::VectorXd> out) {
        const double t = grid.t(j);
        const Eigen::VectorXd x = trajectory.states.at(p, j);
        const Eigen::VectorXd u = trajectory.controls_used.at(p, j);
        if (!ax_cache.empty()) {
            out = -ax_cache[j].transpose() * y - bx_cache[j].transpose() * Y;
        } else {
            out = -scenario.drift_x(t, x, u).transpose() * y -
                  scenario.diffusion_x(t, x, u).transpose() * Y;
        }
        out += scenario.cost_x(t, x, u);
    };
}

AdjointPair solve_first_adjoint(const Scenario& scenario, const StateEnsemble& trajectory,
                                const BrownianEnsemble& ens, const RegressionBasis& basis) {
    if (!(trajectory.id == ens.id())) {
        throw DomainError("solve_first_adjoint: trajectory was not generated from this ensemble");
    }
    if (trajectory.states.dim() != scenario.n()) {
        throw DomainError("solve_first_adjoint: trajectory dimension mismatch");
    }
    const std::size_t n_paths = ens.n_paths();
    const std::size_t n_steps = ens.n_steps();
    PathField terminal(n_paths, 1, scenario.n());
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        terminal.at(p, 0) = -scenario.terminal_x(trajectory.states.at(p, n_steps));
    });
    auto sol = solve_bsde(scenario.op.semigroup_factors(ens.grid().dt()), terminal,
                          first_adjoint_driver(scenario, trajectory), trajectory.states, ens, basis);
    return AdjointPair{ens.grid(), ens.id(), std::move(sol.y), std::move(sol.Y)};
}

std::vector<SpectralVector> deterministic_first_adjoint(const OperatorSpec& op,
                                                        const SpectralVector& yT,
                                                        const std::vector<SpectralVector>& f_path,
                                                        const TimeGrid& grid) {
    require_dimension(op, yT, "deterministic_first_adjoint");
    if (f_path.size() != grid.n_steps()) {
        throw DomainError("deterministic_first_adjoint: f_path must hold one value per step");
    }
    for (const auto& f : f_path) require_dimension(op, f, "deterministic_first_adjoint");
    const std::size_t n_steps = grid.n_steps();
    const double dt = grid.dt();
    std::vector<SpectralVector> y(n_steps + 1);
    for (std::size_t j = 0; j <= n_steps; ++j) {
        SpectralVector v = semigroup_apply(op, static_cast<double>(n_steps - j) * dt, yT);
        for (std::size_t i = j; i < n_steps; ++i) {
            v -= semigroup_apply(op, static_cast<double>(i - j) * dt, f_path[i]) * dt;
        }
        y[j] = std::move(v);
    }
    return y;
}

}  // namespace smpkit
