#include "smpkit/scenarios.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

#ifndef SMPKIT_DEFAULT_PRESET_DIR
#define SMPKIT_DEFAULT_PRESET_DIR "presets"
#endif

namespace smpkit {

namespace {

/// Catmull-Rom interpolation of lattice values, clamped to the lattice.
double interpolate(const std::vector<double>& v, double lo, double h, double x) {
    const double s = std::clamp((x - lo) / h, 0.0, static_cast<double>(v.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(s), v.size() - 2);
    const double f = s - static_cast<double>(i);
    const double p1 = v[i], p2 = v[i + 1];
    const double p0 = i > 0 ? v[i - 1] : 2.0 * p1 - p2;
    const double p3 = i + 2 < v.size() ? v[i + 2] : 2.0 * p2 - p1;
    return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
}

}  // namespace

void LqParams::validate() const {
    const auto n = A.rows();
    const auto m = B.cols();
    auto fail = [](const char* what) { throw DomainError(std::string("LqParams: ") + what); };
    if (n == 0 || A.cols() != n) fail("A must be square and non-empty");
    if (B.rows() != n || m == 0) fail("B shape");
    if (C.rows() != n || C.cols() != n) fail("C shape");
    if (D.rows() != n || D.cols() != m) fail("D shape");
    if (sigma.size() != n) fail("sigma shape");
    if (M.rows() != n || M.cols() != n || G.rows() != n || G.cols() != n) fail("M or G shape");
    if (N.rows() != m || N.cols() != m) fail("N shape");
    if (x0.size() != n) fail("x0 shape");
    if (!(T > 0.0)) fail("T must be positive");
    if (Eigen::LLT<Eigen::MatrixXd>(N).info() != Eigen::Success) fail("N must be positive definite");
}

Scenario make_lq_scenario(const LqParams& lq, ControlSet control_set, std::string name) {
    lq.validate();
    const auto n = static_cast<Eigen::Index>(lq.n());
    ScenarioDerivatives d;
    d.drift_x = [A = lq.A](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return A; };
    d.drift_u = [B = lq.B](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return B; };
    d.diffusion_x = [C = lq.C](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return C; };
    d.diffusion_u = [D = lq.D](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return D; };
    d.cost_x = [M = lq.M](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd {
        return M * x;
    };
    d.cost_u = [N = lq.N](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::VectorXd {
        return N * u;
    };
    d.cost_xx = [M = lq.M](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return M; };
    d.terminal_x = [G = lq.G](const Eigen::VectorXd& x) -> Eigen::VectorXd { return G * x; };
    d.terminal_xx = [G = lq.G](const Eigen::VectorXd&) { return G; };
    auto zero_hessian = [n](double, const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Zero(n, n).eval();
    };
    d.drift_xx = zero_hessian;
    d.diffusion_xx = zero_hessian;

    const double lip = std::max({lq.A.norm(), lq.B.norm(), lq.C.norm(), lq.D.norm()});
    return Scenario{
        .name = std::move(name),
        .op = OperatorSpec(std::vector<double>(lq.n(), 0.0)),
        .control_dim = lq.m(),
        .control_set = std::move(control_set),
        .lipschitz = lip,
        .drift = [A = lq.A, B = lq.B](double, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u) -> Eigen::VectorXd { return A * x + B * u; },
        .diffusion = [C = lq.C, D = lq.D, s = lq.sigma](double, const Eigen::VectorXd& x,
                                                        const Eigen::VectorXd& u) -> Eigen::VectorXd {
            return C * x + D * u + s;
        },
        .running_cost = [M = lq.M, N = lq.N](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
            return 0.5 * (x.dot(M * x) + u.dot(N * u));
        },
        .terminal_cost = [G = lq.G](const Eigen::VectorXd& x) { return 0.5 * x.dot(G * x); },
        .derivatives = std::move(d),
        .second_order_data_deterministic = true,
    };
}

std::pair<Scenario, LqParams> make_lq_scalar(double sigma, double control_bound) {
    LqParams lq;
    lq.A = Eigen::MatrixXd::Zero(1, 1);
    lq.B = Eigen::MatrixXd::Ones(1, 1);
    lq.C = Eigen::MatrixXd::Zero(1, 1);
    lq.D = Eigen::MatrixXd::Zero(1, 1);
    lq.sigma = Eigen::VectorXd::Constant(1, sigma);
    lq.M = Eigen::MatrixXd::Ones(1, 1);
    lq.N = Eigen::MatrixXd::Ones(1, 1);
    lq.G = Eigen::MatrixXd::Ones(1, 1);
    lq.T = 1.0;
    lq.x0 = Eigen::VectorXd::Ones(1);
    auto box = ControlSet::box(Eigen::VectorXd::Constant(1, -control_bound),
                               Eigen::VectorXd::Constant(1, control_bound));
    Scenario s = make_lq_scenario(lq, std::move(box), "lq_scalar");
    return {std::move(s), std::move(lq)};
}

double OracleBundle::value_at(const Eigen::VectorXd& x0) const {
    if (is_riccati()) {
        return 0.5 * x0.dot(P.front() * x0) + q.front().dot(x0) + r.front();
    }
    if (value_table.empty()) throw DomainError("OracleBundle: empty oracle");
    if (x0.size() != 1) throw DomainError("OracleBundle: lattice oracle is scalar");
    return interpolate(value_table.front(), lattice.front(), lattice[1] - lattice[0], x0[0]);
}

Eigen::VectorXd OracleBundle::control_at(std::size_t step, const Eigen::VectorXd& x) const {
    if (is_riccati()) {
        const std::size_t j = std::min(step, gain.size() - 1);
        return -(gain[j] * x + offset[j]);
    }
    if (policy_table.empty()) throw DomainError("OracleBundle: empty oracle");
    const auto& pol = policy_table[std::min(step, policy_table.size() - 1)];
    const double lo = lattice.front();
    const double h = lattice[1] - lattice[0];
    const double s = std::clamp((x[0] - lo) / h, 0.0, static_cast<double>(lattice.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(s), lattice.size() - 2);
    const double f = s - static_cast<double>(i);
    return Eigen::VectorXd::Constant(1, (1.0 - f) * pol[i] + f * pol[i + 1]);
}

ControlProcess OracleBundle::feedback() const {
    const OracleBundle copy = *this;
    const std::size_t m = is_riccati() ? static_cast<std::size_t>(gain.front().rows()) : 1;
    return ControlProcess::feedback(
        [copy](std::size_t step, double, const Eigen::VectorXd& x) { return copy.control_at(step, x); }, m);
}

namespace {

struct RiccatiState {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    double r;
};

struct RiccatiRhs {
    const LqParams& lq;

    /// Returns -d/dt of the state together with the feedback (gain, offset).
    RiccatiState operator()(const RiccatiState& s, Eigen::MatrixXd* gain = nullptr,
                            Eigen::VectorXd* offset = nullptr) const {
        const Eigen::MatrixXd R = lq.N + lq.D.transpose() * s.P * lq.D;
        const Eigen::LLT<Eigen::MatrixXd> llt(R);
        if (llt.info() != Eigen::Success || !R.allFinite()) {
            throw OracleBreakdownError("riccati_oracle: N + D^T P D is not positive definite");
        }
        const Eigen::MatrixXd L = lq.B.transpose() * s.P + lq.D.transpose() * s.P * lq.C;
        const Eigen::VectorXd l = lq.B.transpose() * s.q + lq.D.transpose() * s.P * lq.sigma;
        const Eigen::MatrixXd RiL = llt.solve(L);
        const Eigen::VectorXd Ril = llt.solve(l);
        if (gain != nullptr) *gain = RiL;
        if (offset != nullptr) *offset = Ril;
        RiccatiState d;
        d.P = lq.M + lq.A.transpose() * s.P + s.P * lq.A + lq.C.transpose() * s.P * lq.C - L.transpose() * RiL;
        d.P = 0.5 * (d.P + d.P.transpose());
        d.q = lq.A.transpose() * s.q + lq.C.transpose() * s.P * lq.sigma - L.transpose() * Ril;
        d.r = 0.5 * lq.sigma.dot(s.P * lq.sigma) - 0.5 * l.dot(Ril);
        return d;
    }
};

RiccatiState axpy(const RiccatiState& s, double h, const RiccatiState& d) {
    return {s.P + h * d.P, s.q + h * d.q, s.r + h * d.r};
}

}  // namespace

OracleBundle riccati_oracle(const LqParams& lq, const TimeGrid& grid, std::size_t substeps) {
    lq.validate();
    if (substeps == 0) throw DomainError("riccati_oracle: substeps must be positive");
    const std::size_t n_steps = grid.n_steps();
    const RiccatiRhs rhs{lq};
    OracleBundle out;
    out.grid = grid;
    out.P.resize(n_steps + 1);
    out.q.resize(n_steps + 1);
    out.r.resize(n_steps + 1);
    out.gain.resize(n_steps + 1);
    out.offset.resize(n_steps + 1);

    RiccatiState s{lq.G, Eigen::VectorXd::Zero(lq.A.rows()), 0.0};
    const double h = grid.dt() / static_cast<double>(substeps);
    for (std::size_t j = n_steps + 1; j-- > 0;) {
        if (j < n_steps) {
            // Backward in time: s(t - h) = s(t) + h * (-s').
            for (std::size_t k = 0; k < substeps; ++k) {
                const RiccatiState k1 = rhs(s);
                const RiccatiState k2 = rhs(axpy(s, 0.5 * h, k1));
                const RiccatiState k3 = rhs(axpy(s, 0.5 * h, k2));
                const RiccatiState k4 = rhs(axpy(s, h, k3));
                s.P += (h / 6.0) * (k1.P + 2.0 * k2.P + 2.0 * k3.P + k4.P);
                s.q += (h / 6.0) * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q);
                s.r += (h / 6.0) * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
            }
        }
        if (!s.P.allFinite() || !s.q.allFinite() || !std::isfinite(s.r)) {
            throw OracleBreakdownError("riccati_oracle: non-finite solution");
        }
        out.P[j] = s.P;
        out.q[j] = s.q;
        out.r[j] = s.r;
        rhs(s, &out.gain[j], &out.offset[j]);
    }
    return out;
}

Scenario make_heat_scenario(std::size_t n_modes, std::size_t control_dim, const HeatParams& params) {
    if (control_dim == 0 || n_modes < control_dim) {
        throw DomainError("make_heat_scenario: need 1 <= control_dim <= n_modes");
    }
    const auto n = static_cast<Eigen::Index>(n_modes);
    const auto m = static_cast<Eigen::Index>(control_dim);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
    for (Eigen::Index k = 0; k < m; ++k) B(k, k) = 1.0;
    const Eigen::MatrixXd D = params.diffusion_control * B;
    const double beta = params.beta;

    ScenarioDerivatives d;
    d.drift_x = [n](double, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Zero(n, n).eval();
    };
    d.drift_u = [B](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return B; };
    d.diffusion_x = [n, beta](double, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return (beta * Eigen::MatrixXd::Identity(n, n)).eval();
    };
    d.diffusion_u = [D](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return D; };
    d.cost_x = [](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd { return x; };
    d.cost_u = [](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::VectorXd { return u; };
    d.cost_xx = [n](double, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Identity(n, n).eval();
    };
    d.terminal_x = [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; };
    d.terminal_xx = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(n, n).eval(); };
    auto zero_hessian = [n](double, const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Zero(n, n).eval();
    };
    d.drift_xx = zero_hessian;
    d.diffusion_xx = zero_hessian;

    const double bound = params.control_bound;
    return Scenario{
        .name = "heat",
        .op = make_dirichlet_laplacian(n_modes, params.length),
        .control_dim = control_dim,
        .control_set = ControlSet::box(Eigen::VectorXd::Constant(m, -bound), Eigen::VectorXd::Constant(m, bound)),
        .lipschitz = std::max({B.norm(), beta, D.norm()}),
        .drift = [B](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::VectorXd { return B * u; },
        .diffusion = [D, beta](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
            return beta * x + D * u;
        },
        .running_cost = [](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
            return 0.5 * (x.squaredNorm() + u.squaredNorm());
        },
        .terminal_cost = [](const Eigen::VectorXd& x) { return 0.5 * x.squaredNorm(); },
        .derivatives = std::move(d),
        .second_order_data_deterministic = true,
    };
}

Scenario make_cubic_scalar(const CubicParams& params) {
    const double kappa = params.kappa;
    const double sigma = params.sigma;
    const double gamma = params.gamma;
    auto mat = [](double v) { return Eigen::MatrixXd::Constant(1, 1, v); };
    auto vec = [](double v) { return Eigen::VectorXd::Constant(1, v); };

    ScenarioDerivatives d;
    d.drift_x = [mat](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return mat(0.0); };
    d.drift_u = [mat](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return mat(1.0); };
    d.diffusion_x = [mat, kappa](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return mat(kappa); };
    d.diffusion_u = [mat](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return mat(0.0); };
    d.cost_x = [vec, gamma](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return vec(x[0] + 0.5 * gamma * x[0] * x[0]);
    };
    d.cost_u = [vec](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) { return vec(u[0]); };
    d.cost_xx = [mat, gamma](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
        return mat(1.0 + gamma * x[0]);
    };
    d.terminal_x = [vec, gamma](const Eigen::VectorXd& x) { return vec(x[0] + 0.5 * gamma * x[0] * x[0]); };
    d.terminal_xx = [mat, gamma](const Eigen::VectorXd& x) { return mat(1.0 + gamma * x[0]); };
    auto zero_hessian = [mat](double, const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
        return mat(0.0);
    };
    d.drift_xx = zero_hessian;
    d.diffusion_xx = zero_hessian;

    const double bound = params.control_bound;
    return Scenario{
        .name = "cubic_scalar",
        .op = OperatorSpec({0.0}),
        .control_dim = 1,
        .control_set = ControlSet::box(vec(-bound), vec(bound)),
        .lipschitz = std::max(1.0, std::abs(kappa)),
        .drift = [](double, const Eigen::VectorXd&, const Eigen::VectorXd& u) -> Eigen::VectorXd { return u; },
        .diffusion = [vec, kappa, sigma](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) {
            return vec(kappa * x[0] + sigma);
        },
        .running_cost = [gamma](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
            return 0.5 * (x[0] * x[0] + u[0] * u[0]) + gamma / 6.0 * x[0] * x[0] * x[0];
        },
        .terminal_cost = [gamma](const Eigen::VectorXd& x) {
            return 0.5 * x[0] * x[0] + gamma / 6.0 * x[0] * x[0] * x[0];
        },
        .derivatives = std::move(d),
        .second_order_data_deterministic = false,
    };
}

std::vector<double> uniform_lattice(double lo, double hi, std::size_t n_points) {
    if (n_points < 4 || !(hi > lo)) throw DomainError("uniform_lattice: need >= 4 points on a non-empty interval");
    std::vector<double> x(n_points);
    const double h = (hi - lo) / static_cast<double>(n_points - 1);
    for (std::size_t i = 0; i < n_points; ++i) x[i] = lo + static_cast<double>(i) * h;
    return x;
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n_points) {
    if (n_points == 0) throw DomainError("gauss_hermite: need at least one node");
    const auto n = static_cast<Eigen::Index>(n_points);
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
    std::vector<double> nodes(n_points), weights(n_points);
    for (Eigen::Index i = 0; i < n; ++i) {
        nodes[static_cast<std::size_t>(i)] = es.eigenvalues()[i];
        const double v0 = es.eigenvectors()(0, i);
        weights[static_cast<std::size_t>(i)] = v0 * v0;
    }
    return {nodes, weights};
}


OracleBundle dp_oracle_scalar(const Scenario& scenario, const std::vector<double>& x_lattice,
                              const std::vector<double>& u_grid, const TimeGrid& grid, double x0) {
    if (scenario.n() != 1 || scenario.control_dim != 1) {
        throw DomainError("dp_oracle_scalar: scenario must be scalar in state and control");
    }
    if (x_lattice.size() < 4 || u_grid.empty()) {
        throw DomainError("dp_oracle_scalar: need a lattice of >= 4 points and a non-empty u grid");
    }
    const double lo = x_lattice.front();
    const double h = x_lattice[1] - x_lattice[0];
    const double hi = x_lattice.back();
    for (std::size_t i = 1; i < x_lattice.size(); ++i) {
        if (std::abs(x_lattice[i] - x_lattice[i - 1] - h) > 1e-9 * (1.0 + std::abs(h))) {
            throw DomainError("dp_oracle_scalar: lattice must be uniform");
        }
    }
    const auto [nodes, weights] = gauss_hermite(7);
    const std::size_t n_steps = grid.n_steps();
    const std::size_t L = x_lattice.size();
    const double dt = grid.dt();
    const double sq = std::sqrt(dt);
    const double factor = scenario.op.semigroup_factors(dt)[0];

    OracleBundle out;
    out.grid = grid;
    out.lattice = x_lattice;
    out.value_table.assign(n_steps + 1, std::vector<double>(L));
    out.policy_table.assign(n_steps, std::vector<double>(L));
    for (std::size_t i = 0; i < L; ++i) {
        out.value_table[n_steps][i] = scenario.terminal_cost(Eigen::VectorXd::Constant(1, x_lattice[i]));
    }
    std::vector<Eigen::VectorXd> controls;
    for (const double u : u_grid) {
        const Eigen::VectorXd uv = Eigen::VectorXd::Constant(1, u);
        if (!scenario.control_set.contains(uv)) throw DomainError("dp_oracle_scalar: u grid leaves the control set");
        controls.push_back(uv);
    }

    for (std::size_t j = n_steps; j-- > 0;) {
        const double t = grid.t(j);
        const auto& next = out.value_table[j + 1];
        auto& cur = out.value_table[j];
        auto& pol = out.policy_table[j];
        kernels::for_each_path(L, [&](std::size_t i) {
            const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, x_lattice[i]);
            double best = std::numeric_limits<double>::infinity();
            double best_u = controls.front()[0];
            for (const auto& u : controls) {
                const double mean = x[0] + scenario.drift(t, x, u)[0] * dt;
                const double vol = scenario.diffusion(t, x, u)[0] * sq;
                double ev = 0.0;
                for (std::size_t q = 0; q < nodes.size(); ++q) {
                    ev += weights[q] * interpolate(next, lo, h, factor * (mean + vol * nodes[q]));
                }
                const double val = scenario.running_cost(t, x, u) * dt + ev;
                if (val < best) {
                    best = val;
                    best_u = u[0];
                }
            }
            cur[i] = best;
            pol[i] = best_u;
        });
    }

    // Forward mass propagation from x0 under the greedy policy.
    std::vector<double> mass(L, 0.0);
    double escaped = 0.0;
    auto deposit = [&](std::vector<double>& m, double x, double w) {
        if (x < lo || x > hi) {
            escaped += w;
            return;
        }
        const double s = (x - lo) / h;
        const auto i = std::min(static_cast<std::size_t>(s), L - 2);
        const double f = s - static_cast<double>(i);
        m[i] += (1.0 - f) * w;
        m[i + 1] += f * w;
    };
    deposit(mass, x0, 1.0);
    for (std::size_t j = 0; j < n_steps; ++j) {
        std::vector<double> nm(L, 0.0);
        const double t = grid.t(j);
        for (std::size_t i = 0; i < L; ++i) {
            if (mass[i] == 0.0) continue;
            const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, x_lattice[i]);
            const Eigen::VectorXd u = Eigen::VectorXd::Constant(1, out.policy_table[j][i]);
            const double mean = x[0] + scenario.drift(t, x, u)[0] * dt;
            const double vol = scenario.diffusion(t, x, u)[0] * sq;
            for (std::size_t q = 0; q < nodes.size(); ++q) {
                deposit(nm, factor * (mean + vol * nodes[q]), mass[i] * weights[q]);
            }
        }
        mass = std::move(nm);
    }
    out.escape_probability = escaped;
    if (escaped > 0.01) {
        throw LatticeTooSmallError("dp_oracle_scalar: " + std::to_string(100.0 * escaped) +
                                   "% of the mass left the lattice");
    }
    return out;
}

PassRule Preset::rule(const std::string& check) const {
    return {file.number_or("k_sigma", 3.0), file.number_or("c_bias." + check, 0.0)};
}

std::filesystem::path preset_directory() {
    if (const char* env = std::getenv("SMPKIT_PRESET_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return SMPKIT_DEFAULT_PRESET_DIR;
}

Preset load_preset(const std::string& name, std::optional<std::size_t> n_modes) {
    std::filesystem::path path = name;
    if (!(name.find('/') != std::string::npos && std::filesystem::is_regular_file(path))) {
        path = preset_directory() / (name + ".preset");
        if (!std::filesystem::is_regular_file(path)) {
            throw PresetError("unknown preset '" + name + "' (looked for " + path.string() + ")");
        }
    }
    const PresetFile f = PresetFile::read(path);
    const std::string kind = f.text("kind");
    const std::string preset_name = f.text_or("name", path.stem().string());
    const double T = f.number_or("T", 1.0);

    if (kind == "lq") {
        if (n_modes && *n_modes != 1) throw PresetError(preset_name + ": lq presets are scalar");
        auto [scenario, lq] = make_lq_scalar(f.number("sigma"), f.number_or("control_bound", 5.0));
        lq.T = T;
        lq.x0 = f.vector("x0");
        lq.validate();
        scenario.name = preset_name;
        return Preset{preset_name, kind, f, std::move(scenario), lq.x0, T, lq,
                      f.text_or("default_control", "riccati"), Eigen::VectorXd()};
    }
    if (kind == "heat") {
        const std::size_t n = n_modes.value_or(f.count("n_modes"));
        const std::size_t m = std::min(n, f.count("control_dim"));
        HeatParams hp;
        hp.beta = f.number("beta");
        hp.diffusion_control = f.number("diffusion_control");
        hp.length = f.number_or("length", 1.0);
        hp.control_bound = f.number_or("control_bound", 5.0);
        Scenario scenario = make_heat_scenario(n, m, hp);
        scenario.name = preset_name;
        const double scale = f.number_or("x0_scale", 1.0);
        SpectralVector x0(static_cast<Eigen::Index>(n));
        for (Eigen::Index k = 0; k < x0.size(); ++k) x0[k] = scale / static_cast<double>(k + 1);
        Eigen::VectorXd u = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), f.number_or("control_value", 0.0));
        return Preset{preset_name, kind, f, std::move(scenario), x0, T, std::nullopt,
                      f.text_or("default_control", "constant"), u};
    }
    if (kind == "cubic") {
        if (n_modes && *n_modes != 1) throw PresetError(preset_name + ": cubic presets are scalar");
        CubicParams cp;
        cp.kappa = f.number("kappa");
        cp.sigma = f.number("sigma");
        cp.gamma = f.number("gamma");
        cp.control_bound = f.number_or("control_bound", 5.0);
        Scenario scenario = make_cubic_scalar(cp);
        scenario.name = preset_name;
        Eigen::VectorXd u = Eigen::VectorXd::Constant(1, f.number_or("control_value", 0.0));
        return Preset{preset_name, kind, f, std::move(scenario), f.vector("x0"), T, std::nullopt,
                      f.text_or("default_control", "constant"), u};
    }
    throw PresetError(path.string() + ": unknown kind '" + kind + "'");
}

}  // namespace smpkit
