#include "smpkit/second_adjoint.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace smpkit {

Eigen::VectorXd tensor_factors(const OperatorSpec& op, double dt) {
    const Eigen::VectorXd s = op.semigroup_factors(dt);
    const Eigen::Index n = s.size();
    Eigen::VectorXd f(n * n);
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index k = 0; k < n; ++k) {
            f[l * n + k] = std::exp((op.eigenvalue(static_cast<std::size_t>(k)) +
                                     op.eigenvalue(static_cast<std::size_t>(l))) *
                                    dt);
        }
    }
    return f;
}

Eigen::MatrixXd tensor_semigroup_apply(const OperatorSpec& op, double dt, const Eigen::MatrixXd& M) {
    const auto n = static_cast<Eigen::Index>(op.n_modes());
    if (M.rows() != n || M.cols() != n) {
        throw DomainError("tensor_semigroup_apply: matrix dimension mismatch");
    }
    const Eigen::VectorXd f = tensor_factors(op, dt);
    return Eigen::Map<const Eigen::MatrixXd>(f.data(), n, n).cwiseProduct(M);
}

namespace {

/// -J^T P - P J - K^T P K - (K^T Q + Q K) + F, the driver without the A-part.
Eigen::MatrixXd matrix_driver(const Eigen::Ref<const Eigen::MatrixXd>& J,
                              const Eigen::Ref<const Eigen::MatrixXd>& K,
                              const Eigen::Ref<const Eigen::MatrixXd>& F,
                              const Eigen::MatrixXd& P, const Eigen::MatrixXd& Q) {
    return -J.transpose() * P - P * J - K.transpose() * P * K - (K.transpose() * Q + Q * K) + F;
}

void check_data(const OperatorSpec& op, const SecondOrderData& data, const BrownianEnsemble& ens) {
    const std::size_t n = op.n_modes();
    for (const MatrixProcess* m : {&data.J, &data.K, &data.F}) {
        if (m->n() != n) throw DomainError("second adjoint: coefficient dimension mismatch");
        if (m->n_times() < ens.n_steps()) {
            throw DomainError("second adjoint: coefficient process has too few steps");
        }
        if (!m->is_deterministic() && m->n_paths() != ens.n_paths()) {
            throw DomainError("second adjoint: coefficient process has wrong path count");
        }
    }
    if (data.terminal.n() != n || data.terminal.n_times() < 1) {
        throw DomainError("second adjoint: terminal data shape mismatch");
    }
    if (!data.terminal.is_deterministic() && data.terminal.n_paths() != ens.n_paths()) {
        throw DomainError("second adjoint: terminal data has wrong path count");
    }
}

bool data_symmetric(const SecondOrderData& data) {
    return data.terminal.max_asymmetry() <= 1e-12 && data.F.max_asymmetry() <= 1e-12;
}

}  // namespace

SecondOrderAdjoint solve_second_adjoint(const OperatorSpec& op, const SecondOrderData& data,
                                        const StateEnsemble& conditioning,
                                        const BrownianEnsemble& ens, const RegressionBasis& basis,
                                        BackwardSplitting splitting) {
    if (!(conditioning.id == ens.id())) {
        throw DomainError("solve_second_adjoint: conditioning trajectory is from another ensemble");
    }
    check_data(op, data, ens);
    const std::size_t n = op.n_modes();
    const std::size_t n_steps = ens.n_steps();
    const double dt = ens.grid().dt();
    const Eigen::VectorXd factors = tensor_factors(op, dt);
    const auto nn = static_cast<Eigen::Index>(n);

    SecondOrderAdjoint out{ens.grid(), ens.id(), MatrixProcess(), MatrixProcess(), 0.0, {}};

    if (data.is_deterministic()) {
        std::vector<Eigen::MatrixXd> P(n_steps + 1);
        P[n_steps] = data.terminal.at(0, 0);
        const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(nn, nn);
        const Eigen::Map<const Eigen::MatrixXd> tf(factors.data(), nn, nn);
        for (std::size_t j = n_steps; j-- > 0;) {
            if (splitting == BackwardSplitting::kPropagateThenDrive) {
                const Eigen::MatrixXd moved = tf.cwiseProduct(P[j + 1]);
                P[j] = moved - matrix_driver(data.J.at(0, j), data.K.at(0, j), data.F.at(0, j), moved,
                                             zero) * dt;
            } else {
                const Eigen::MatrixXd& next = P[j + 1];
                P[j] = tf.cwiseProduct(
                    next - matrix_driver(data.J.at(0, j), data.K.at(0, j), data.F.at(0, j), next, zero) *
                               dt);
            }
        }
        out.P = MatrixProcess::deterministic(P);
        out.Q = MatrixProcess::zero(n, n_steps);
    } else {
        const std::size_t n_paths = ens.n_paths();
        PathField terminal(n_paths, 1, n * n);
        for (std::size_t p = 0; p < n_paths; ++p) {
            const auto m = data.terminal.at(p, 0);
            terminal.at(p, 0) = Eigen::Map<const Eigen::VectorXd>(m.data(), nn * nn);
        }
        const BsdeDriver driver = [&data, nn](std::size_t p, std::size_t j, const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> f) {
            const Eigen::Map<const Eigen::MatrixXd> P(y.data(), nn, nn);
            const Eigen::Map<const Eigen::MatrixXd> Q(z.data(), nn, nn);
            const Eigen::MatrixXd phi =
                matrix_driver(data.J.at(p, j), data.K.at(p, j), data.F.at(p, j), P, Q);
            f = Eigen::Map<const Eigen::VectorXd>(phi.data(), nn * nn);
        };
        auto sol = solve_bsde(factors, terminal, driver, conditioning.states, ens, basis, splitting);
        out.P = MatrixProcess::per_path(n_paths, n_steps + 1, n);
        out.P.field() = std::move(sol.y);
        out.Q = MatrixProcess::per_path(n_paths, n_steps, n);
        out.Q.field() = std::move(sol.Y);
    }

    out.max_asymmetry = out.P.max_asymmetry();
    if (data_symmetric(data) && out.max_asymmetry > 1e-6) {
        out.warnings.push_back("symmetry drift: max |P - P^T| = " + std::to_string(out.max_asymmetry));
    }
    return out;
}

std::vector<Eigen::MatrixXd> lyapunov_oracle(const OperatorSpec& op, const MatrixProcess& J,
                                             const MatrixProcess& K, const MatrixProcess& F,
                                             const Eigen::MatrixXd& terminal, const TimeGrid& grid) {
    const auto n = static_cast<Eigen::Index>(op.n_modes());
    for (const MatrixProcess* m : {&J, &K, &F}) {
        if (!m->is_deterministic()) {
            throw DomainError("lyapunov_oracle: coefficients must be deterministic");
        }
        if (m->n() != op.n_modes() || m->n_times() < grid.n_steps()) {
            throw DomainError("lyapunov_oracle: coefficient shape mismatch");
        }
    }
    if (terminal.rows() != n || terminal.cols() != n) {
        throw DomainError("lyapunov_oracle: terminal dimension mismatch");
    }
    Eigen::VectorXd mu(n);
    for (Eigen::Index k = 0; k < n; ++k) mu[k] = op.eigenvalue(static_cast<std::size_t>(k));
    const Eigen::MatrixXd A = mu.asDiagonal();
    const std::size_t n_steps = grid.n_steps();
    const double dt = grid.dt();
    const double stiffness = 2.0 * mu.cwiseAbs().maxCoeff();
    const auto substeps = static_cast<std::size_t>(std::max(1.0, std::ceil(stiffness * dt / 0.05)));
    const double h = dt / static_cast<double>(substeps);

    // Coefficients at step j (the last step reuses the final available slice).
    auto coef = [&](const MatrixProcess& m, std::size_t j) -> Eigen::MatrixXd {
        return m.at(0, std::min(j, m.n_times() - 1));
    };
    auto rhs = [&](const Eigen::MatrixXd& P, const Eigen::MatrixXd& Jm, const Eigen::MatrixXd& Km,
                   const Eigen::MatrixXd& Fm) -> Eigen::MatrixXd {
        const Eigen::MatrixXd G = A + Jm;
        return -G.transpose() * P - P * G - Km.transpose() * P * Km + Fm;
    };

    std::vector<Eigen::MatrixXd> P(n_steps + 1);
    P[n_steps] = terminal;
    Eigen::MatrixXd cur = terminal;
    for (std::size_t j = n_steps; j-- > 0;) {
        // Linear interpolation between step j and j + 1 values; s in [0, 1] from t_j.
        const Eigen::MatrixXd J0 = coef(J, j), J1 = coef(J, j + 1);
        const Eigen::MatrixXd K0 = coef(K, j), K1 = coef(K, j + 1);
        const Eigen::MatrixXd F0 = coef(F, j), F1 = coef(F, j + 1);
        auto eval = [&](const Eigen::MatrixXd& Pv, double s) {
            return rhs(Pv, J0 + s * (J1 - J0), K0 + s * (K1 - K0), F0 + s * (F1 - F0));
        };
        for (std::size_t sidx = substeps; sidx-- > 0;) {
            // Integrate backward from s_hi to s_lo.
            const double s_hi = static_cast<double>(sidx + 1) / static_cast<double>(substeps);
            const double s_mid = (static_cast<double>(sidx) + 0.5) / static_cast<double>(substeps);
            const double s_lo = static_cast<double>(sidx) / static_cast<double>(substeps);
            const Eigen::MatrixXd k1 = eval(cur, s_hi);
            const Eigen::MatrixXd k2 = eval(cur - 0.5 * h * k1, s_mid);
            const Eigen::MatrixXd k3 = eval(cur - 0.5 * h * k2, s_mid);
            const Eigen::MatrixXd k4 = eval(cur - h * k3, s_lo);
            cur -= (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        P[j] = cur;
    }
    return P;
}

SecondOrderData second_order_data(const Scenario& scenario, const StateEnsemble& trajectory,
                                  const AdjointPair& first) {
    if (!(trajectory.id == first.id)) {
        throw DomainError("second_order_data: adjoint and trajectory come from different ensembles");
    }
    const std::size_t n = scenario.n();
    const std::size_t n_steps = trajectory.grid.n_steps();
    const std::size_t n_paths = trajectory.states.n_paths();
    const TimeGrid& grid = trajectory.grid;

    if (scenario.second_order_data_deterministic) {
        std::vector<Eigen::MatrixXd> J(n_steps), K(n_steps), F(n_steps);
        for (std::size_t j = 0; j < n_steps; ++j) {
            const Eigen::VectorXd x = trajectory.states.at(0, j);
            const Eigen::VectorXd u = trajectory.controls_used.at(0, j);
            J[j] = scenario.drift_x(grid.t(j), x, u);
            K[j] = scenario.diffusion_x(grid.t(j), x, u);
            F[j] = scenario.cost_xx(grid.t(j), x, u);
        }
        const Eigen::MatrixXd PT = -scenario.terminal_xx(trajectory.states.at(0, n_steps));
        return {MatrixProcess::deterministic(J), MatrixProcess::deterministic(K),
                MatrixProcess::deterministic(F), MatrixProcess::constant(PT, 1)};
    }

    SecondOrderData data{MatrixProcess::per_path(n_paths, n_steps, n),
                         MatrixProcess::per_path(n_paths, n_steps, n),
                         MatrixProcess::per_path(n_paths, n_steps, n),
                         MatrixProcess::per_path(n_paths, 1, n)};
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        for (std::size_t j = 0; j < n_steps; ++j) {
            const double t = grid.t(j);
            const Eigen::VectorXd x = trajectory.states.at(p, j);
            const Eigen::VectorXd u = trajectory.controls_used.at(p, j);
            const Eigen::VectorXd y = first.y.at(p, j);
            const Eigen::VectorXd Y = first.Y.at(p, j);
            data.J.at(p, j) = scenario.drift_x(t, x, u);
            data.K.at(p, j) = scenario.diffusion_x(t, x, u);
            // -H_xx = g_xx - <y, a_xx> - <Y, b_xx>
            data.F.at(p, j) = scenario.cost_xx(t, x, u) - scenario.drift_xx(t, x, u, y) -
                              scenario.diffusion_xx(t, x, u, Y);
        }
        data.terminal.at(p, 0) = -scenario.terminal_xx(trajectory.states.at(p, n_steps));
    });
    return data;
}

}  // namespace smpkit
