#include "smpkit/maximum_principle.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smpkit {

double hamiltonian(const Scenario& scenario, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                   const Eigen::VectorXd& k1, const Eigen::VectorXd& k2) {
    const auto n = static_cast<Eigen::Index>(scenario.n());
    if (x.size() != n || k1.size() != n || k2.size() != n) {
        throw DomainError("hamiltonian: state or multiplier dimension mismatch");
    }
    if (!scenario.control_set.contains(u)) {
        throw DomainError("hamiltonian: control value outside the control set");
    }
    return k1.dot(scenario.drift(t, x, u)) + k2.dot(scenario.diffusion(t, x, u)) -
           scenario.running_cost(t, x, u);
}

namespace {

void require_consistent(const StateEnsemble& trajectory, const AdjointPair& first, const char* what) {
    if (!(trajectory.id == first.id)) {
        throw DomainError(std::string(what) + ": adjoint and trajectory come from different ensembles");
    }
    if (trajectory.controls_used.empty()) {
        throw DomainError(std::string(what) + ": trajectory carries no control record");
    }
}

Eigen::VectorXd gradient_at(const Scenario& scenario, double t, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, const Eigen::VectorXd& y, const Eigen::VectorXd& Y) {
    return scenario.drift_u(t, x, u).transpose() * y + scenario.diffusion_u(t, x, u).transpose() * Y -
           scenario.cost_u(t, x, u);
}

}  // namespace

Eigen::MatrixXd convex_gradient(const Scenario& scenario, std::size_t t_index,
                                const StateEnsemble& trajectory, const AdjointPair& first) {
    if (!scenario.control_set.is_convex()) {
        throw WrongTheoremError(
            "convex_gradient: control set is not convex; use spike_functional for the general condition");
    }
    require_consistent(trajectory, first, "convex_gradient");
    if (t_index >= trajectory.grid.n_steps()) {
        throw DomainError("convex_gradient: t_index outside the control grid");
    }
    const std::size_t n_paths = trajectory.states.n_paths();
    Eigen::MatrixXd g(static_cast<Eigen::Index>(n_paths), static_cast<Eigen::Index>(scenario.control_dim));
    const double t = trajectory.grid.t(t_index);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        g.row(static_cast<Eigen::Index>(p)) =
            gradient_at(scenario, t, trajectory.states.at(p, t_index), trajectory.controls_used.at(p, t_index),
                        first.y.at(p, t_index), first.Y.at(p, t_index))
                .transpose();
    });
    return g;
}

PathField gradient_field(const Scenario& scenario, const StateEnsemble& trajectory, const AdjointPair& first) {
    require_consistent(trajectory, first, "gradient_field");
    const std::size_t n_paths = trajectory.states.n_paths();
    const std::size_t n_steps = trajectory.grid.n_steps();
    PathField g(n_paths, n_steps, scenario.control_dim);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        for (std::size_t j = 0; j < n_steps; ++j) {
            g.at(p, j) = gradient_at(scenario, trajectory.grid.t(j), trajectory.states.at(p, j),
                                     trajectory.controls_used.at(p, j), first.y.at(p, j), first.Y.at(p, j));
        }
    });
    return g;
}

std::vector<double> spike_functional(const Scenario& scenario, std::size_t t_index, const Eigen::VectorXd& u,
                                     const StateEnsemble& trajectory, const AdjointPair& first,
                                     const SecondOrderAdjoint& second) {
    require_consistent(trajectory, first, "spike_functional");
    if (!(second.id == first.id)) {
        throw DomainError("spike_functional: second adjoint comes from a different ensemble");
    }
    if (t_index >= trajectory.grid.n_steps()) {
        throw DomainError("spike_functional: t_index outside the control grid");
    }
    if (!scenario.control_set.contains(u)) {
        throw DomainError("spike_functional: control value outside the control set");
    }
    const std::size_t n_paths = trajectory.states.n_paths();
    const double t = trajectory.grid.t(t_index);
    std::vector<double> s(n_paths);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        const Eigen::VectorXd x = trajectory.states.at(p, t_index);
        const Eigen::VectorXd ubar = trajectory.controls_used.at(p, t_index);
        const Eigen::VectorXd y = first.y.at(p, t_index);
        const Eigen::VectorXd Y = first.Y.at(p, t_index);
        const Eigen::VectorXd db = scenario.diffusion(t, x, ubar) - scenario.diffusion(t, x, u);
        s[p] = hamiltonian(scenario, t, x, ubar, y, Y) - hamiltonian(scenario, t, x, u, y, Y) -
               0.5 * db.dot(second.P.at(p, t_index) * db);
    });
    return s;
}

namespace {

void finish_report(MPReport& r) {
    double worst_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const MPEntry& e = r.entries[i];
        r.max_violation = std::max(r.max_violation, std::max(0.0, -e.mean));
        const double excess = -e.mean - e.tolerance;
        if (excess > worst_excess) {
            worst_excess = excess;
            r.worst = i;
        }
        if (excess > 0.0) r.pass = false;
    }
}

void require_grids(const std::vector<Eigen::VectorXd>& u_grid, const std::vector<std::size_t>& t_grid,
                   std::size_t n_steps) {
    if (u_grid.empty() || t_grid.empty()) {
        throw DomainError("check_condition: empty u or t grid");
    }
    for (const std::size_t j : t_grid) {
        if (j >= n_steps) throw DomainError("check_condition: t-grid index outside the control grid");
    }
}

MPEntry make_entry(std::size_t j, double t, const Eigen::VectorXd& u, const std::vector<double>& values,
                   double dt, const PassRule& rule) {
    const auto m = kernels::moments(values);
    return {j, t, u, m.mean, m.std_error, rule.k_sigma * m.std_error + rule.c_bias * dt};
}

}  // namespace

MPReport check_condition(const Scenario& scenario, const StateEnsemble& trajectory, const AdjointPair& first,
                         const SecondOrderAdjoint& second, const std::vector<Eigen::VectorXd>& u_grid,
                         const std::vector<std::size_t>& t_grid, const PassRule& rule) {
    require_grids(u_grid, t_grid, trajectory.grid.n_steps());
    MPReport r;
    r.condition = "spike";
    const double dt = trajectory.grid.dt();
    for (const std::size_t j : t_grid) {
        for (const auto& u : u_grid) {
            const auto s = spike_functional(scenario, j, u, trajectory, first, second);
            r.entries.push_back(make_entry(j, trajectory.grid.t(j), u, s, dt, rule));
        }
    }
    finish_report(r);
    return r;
}

MPReport check_convex_condition(const Scenario& scenario, const StateEnsemble& trajectory,
                                const AdjointPair& first, const std::vector<Eigen::VectorXd>& u_grid,
                                const std::vector<std::size_t>& t_grid, const PassRule& rule) {
    require_grids(u_grid, t_grid, trajectory.grid.n_steps());
    MPReport r;
    r.condition = "convex";
    const double dt = trajectory.grid.dt();
    const std::size_t n_paths = trajectory.states.n_paths();
    for (const std::size_t j : t_grid) {
        const Eigen::MatrixXd g = convex_gradient(scenario, j, trajectory, first);
        for (const auto& u : u_grid) {
            if (!scenario.control_set.contains(u)) {
                throw DomainError("check_convex_condition: control value outside the control set");
            }
            std::vector<double> values(n_paths);
            for (std::size_t p = 0; p < n_paths; ++p) {
                const Eigen::VectorXd ubar = trajectory.controls_used.at(p, j);
                values[p] = -g.row(static_cast<Eigen::Index>(p)).dot(u - ubar);
            }
            r.entries.push_back(make_entry(j, trajectory.grid.t(j), u, values, dt, rule));
        }
    }
    finish_report(r);
    return r;
}

std::vector<std::size_t> uniform_time_grid(std::size_t n_steps, std::size_t count) {
    std::vector<std::size_t> g;
    for (std::size_t k = 0; k < count; ++k) g.push_back(k * n_steps / count);
    return g;
}

namespace {

/// Per-path open-loop values of any control process, realized along a
/// simulation when it is a feedback law.
PathField open_loop_values(const Scenario& scenario, const InitialState& x0, const ControlProcess& control,
                           const BrownianEnsemble& ens) {
    if (control.is_per_path()) {
        const PathField& v = control.per_path_values();
        if (v.n_paths() != ens.n_paths() || v.n_times() != ens.n_steps()) {
            throw DomainError("control shape does not match the ensemble");
        }
        return v;
    }
    return simulate_controlled(scenario, x0, control, ens).controls_used;
}

double path_norm(const PathField& a, const PathField& b, double dt) {
    const std::size_t n_paths = a.n_paths();
    std::vector<double> sq(n_paths);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.n_times(); ++j) s += (a.at(p, j) - b.at(p, j)).squaredNorm() * dt;
        sq[p] = s;
    });
    return std::sqrt(kernels::moments(sq).mean);
}

}  // namespace

OptimizerResult projected_gradient(const Scenario& scenario, const InitialState& x0, const ControlProcess& init,
                                   const StepRule& rule, std::size_t max_iters, const BrownianEnsemble& ens,
                                   const RegressionBasis& basis) {
    if (!scenario.control_set.is_convex()) {
        throw WrongTheoremError("projected_gradient: control set is not convex; use spike_experiment");
    }
    if (!(rule.step >= 0.0)) {
        throw DomainError("projected_gradient: step must be non-negative");
    }
    const double dt = ens.grid().dt();
    OptimizerResult out;
    out.control = open_loop_values(scenario, x0, init, ens);
    double last_step_norm = 0.0;
    std::size_t rises = 0;
    for (std::size_t k = 0;; ++k) {
        const StateEnsemble traj =
            simulate_controlled(scenario, x0, ControlProcess::open_loop_per_path(out.control), ens);
        const CostEstimate cost = estimate_cost(scenario, traj);
        out.history.push_back({k, cost.estimate, cost.std_error, last_step_norm});
        if (k > 0) {
            const double change = cost.estimate - out.history[k - 1].J;
            if (change > 10.0 * cost.std_error) {
                if (++rises >= 5) {
                    throw StepRuleError("projected_gradient: cost rose by more than 10 stderr on 5 consecutive "
                                        "iterations");
                }
            } else {
                rises = 0;
            }
            if (last_step_norm < 1e-6) {
                out.stop_reason = "step_norm";
                break;
            }
            if (std::abs(change) < rule.stagnation * cost.std_error) {
                out.stop_reason = "stagnation";
                break;
            }
        }
        if (k == max_iters) {
            out.stop_reason = "max_iters";
            break;
        }
        const AdjointPair first = solve_first_adjoint(scenario, traj, ens, basis);
        const PathField grad = gradient_field(scenario, traj, first);
        PathField next(out.control.n_paths(), out.control.n_times(), out.control.dim());
        kernels::for_each_path(next.n_paths(), [&](std::size_t p) {
            for (std::size_t j = 0; j < next.n_times(); ++j) {
                next.at(p, j) =
                    scenario.control_set.project(out.control.at(p, j) + rule.step * grad.at(p, j));
            }
        });
        last_step_norm = path_norm(next, out.control, dt);
        out.control = std::move(next);
    }
    return out;
}

IdentityReport gradient_consistency(const Scenario& scenario, const InitialState& x0, const PathField& control,
                                    const PathField& direction, double h, const BrownianEnsemble& ens,
                                    const RegressionBasis& basis, const PassRule& rule) {
    if (!(h > 0.0)) throw DomainError("gradient_consistency: h must be positive");
    if (control.n_paths() != direction.n_paths() || control.n_times() != direction.n_times() ||
        control.dim() != direction.dim()) {
        throw DomainError("gradient_consistency: direction shape mismatch");
    }
    const double dt = ens.grid().dt();
    const StateEnsemble traj = simulate_controlled(scenario, x0, ControlProcess::open_loop_per_path(control), ens);
    const AdjointPair first = solve_first_adjoint(scenario, traj, ens, basis);
    const PathField grad = gradient_field(scenario, traj, first);

    auto shifted_costs = [&](double sign) {
        PathField u = control;
        auto dst = u.raw();
        const auto src = direction.raw();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += sign * h * src[i];
        return path_costs(scenario,
                          simulate_controlled(scenario, x0, ControlProcess::open_loop_per_path(std::move(u)), ens));
    };
    const std::vector<double> plus = shifted_costs(1.0);
    const std::vector<double> minus = shifted_costs(-1.0);

    const std::size_t n_paths = ens.n_paths();
    std::vector<double> fd(n_paths), pairing(n_paths);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        fd[p] = (plus[p] - minus[p]) / (2.0 * h);
        double s = 0.0;
        for (std::size_t j = 0; j < ens.n_steps(); ++j) s -= grad.at(p, j).dot(direction.at(p, j)) * dt;
        pairing[p] = s;
    });
    return make_identity_report("gradient", fd, pairing, dt, rule);
}

SpikeTable spike_experiment(const Scenario& scenario, const InitialState& x0, const ControlProcess& ubar,
                            const Eigen::VectorXd& u_alt, double tau, const std::vector<double>& eps_list,
                            const BrownianEnsemble& ens, const RegressionBasis& basis) {
    const TimeGrid& grid = ens.grid();
    const double dt = grid.dt();
    if (eps_list.empty()) throw DomainError("spike_experiment: empty eps list");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw DomainError("spike_experiment: eps must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
            throw DomainError("spike_experiment: eps list must be strictly decreasing");
        }
    }
    if (tau < grid.t0() || tau + eps_list.front() > grid.T() + 1e-12) {
        throw DomainError("spike_experiment: tau + max eps exceeds the horizon");
    }
    if (!scenario.control_set.contains(u_alt)) {
        throw DomainError("spike_experiment: u_alt outside the control set");
    }
    const auto j0 = static_cast<std::size_t>(std::llround((tau - grid.t0()) / dt));
    std::vector<std::size_t> j1;
    for (const double eps : eps_list) {
        const auto steps = std::max<long long>(1, std::llround(eps / dt));
        j1.push_back(std::min(grid.n_steps(), j0 + static_cast<std::size_t>(steps)));
    }

    const PathField base_values = open_loop_values(scenario, x0, ubar, ens);
    const StateEnsemble base = simulate_controlled(scenario, x0, ControlProcess::open_loop_per_path(base_values), ens);
    const std::vector<double> base_costs = path_costs(scenario, base);
    const AdjointPair first = solve_first_adjoint(scenario, base, ens, basis);
    const SecondOrderData data = second_order_data(scenario, base, first);
    const SecondOrderAdjoint second = solve_second_adjoint(scenario.op, data, base, ens, basis);

    const std::size_t n_paths = ens.n_paths();
    // Cumulative int_{tau}^{t_j} S dt per path for j in [j0, j1[0]].
    const std::size_t span = j1.front() - j0;
    std::vector<std::vector<double>> cumulative(span + 1, std::vector<double>(n_paths, 0.0));
    for (std::size_t k = 0; k < span; ++k) {
        const auto s = spike_functional(scenario, j0 + k, u_alt, base, first, second);
        for (std::size_t p = 0; p < n_paths; ++p) cumulative[k + 1][p] = cumulative[k][p] + s[p] * dt;
    }

    SpikeTable table;
    const double J_base = kernels::moments(base_costs).mean;
    for (std::size_t r = 0; r < eps_list.size(); ++r) {
        PathField values = base.controls_used;
        for (std::size_t p = 0; p < n_paths; ++p) {
            for (std::size_t j = j0; j < j1[r]; ++j) values.at(p, j) = u_alt;
        }
        const auto costs = path_costs(
            scenario, simulate_controlled(scenario, x0, ControlProcess::open_loop_per_path(std::move(values)), ens));
        std::vector<double> delta(n_paths), rem(n_paths);
        const auto& pred = cumulative[j1[r] - j0];
        for (std::size_t p = 0; p < n_paths; ++p) {
            delta[p] = costs[p] - base_costs[p];
            rem[p] = delta[p] - pred[p];
        }
        SpikeRow row;
        row.epsilon = eps_list[r];
        row.tau = grid.t(j0);
        row.J_perturbed = kernels::moments(costs).mean;
        row.J_base = J_base;
        const auto md = kernels::moments(delta);
        row.delta_J = md.mean;
        row.delta_J_std_error = md.std_error;
        row.predicted = kernels::moments(pred).mean;
        const auto mr = kernels::moments(rem);
        row.remainder = mr.mean;
        row.remainder_std_error = mr.std_error;
        row.remainder_over_epsilon = row.remainder / row.epsilon;
        if (r > 0 && std::abs(row.remainder_over_epsilon) >
                         std::abs(table.rows.back().remainder_over_epsilon)) {
            ++table.inversions;
        }
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace smpkit
