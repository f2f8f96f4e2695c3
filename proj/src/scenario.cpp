#include "smpkit/scenario.hpp"

#include "smpkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace smpkit {

namespace {

double fd_step(double xi) { return 1e-5 * (1.0 + std::abs(xi)); }
double fd_step2(double xi) { return 1e-4 * (1.0 + std::abs(xi)); }

/// Jacobian of f with respect to its argument z by central differences.
template <typename F>
Eigen::MatrixXd jacobian(const F& f, const Eigen::VectorXd& z) {
    const Eigen::VectorXd f0 = f(z);
    Eigen::MatrixXd jac(f0.size(), z.size());
    Eigen::VectorXd zp = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = fd_step(z[i]);
        zp[i] = z[i] + h;
        const Eigen::VectorXd fp = f(zp);
        zp[i] = z[i] - h;
        const Eigen::VectorXd fm = f(zp);
        zp[i] = z[i];
        jac.col(i) = (fp - fm) / (2.0 * h);
    }
    return jac;
}

template <typename F>
Eigen::VectorXd gradient(const F& f, const Eigen::VectorXd& z) {
    Eigen::VectorXd g(z.size());
    Eigen::VectorXd zp = z;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = fd_step(z[i]);
        zp[i] = z[i] + h;
        const double fp = f(zp);
        zp[i] = z[i] - h;
        const double fm = f(zp);
        zp[i] = z[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

/// Four-point central second differences of a scalar function.
template <typename F>
Eigen::MatrixXd hessian(const F& f, const Eigen::VectorXd& z) {
    const Eigen::Index n = z.size();
    Eigen::MatrixXd hess(n, n);
    Eigen::VectorXd zp = z;
    const double f0 = f(z);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double hi = fd_step2(z[i]);
        zp[i] = z[i] + hi;
        const double fp = f(zp);
        zp[i] = z[i] - hi;
        const double fm = f(zp);
        zp[i] = z[i];
        hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double hj = fd_step2(z[j]);
            auto eval = [&](double si, double sj) {
                zp[i] = z[i] + si * hi;
                zp[j] = z[j] + sj * hj;
                const double v = f(zp);
                zp[i] = z[i];
                zp[j] = z[j];
                return v;
            };
            const double v = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * hi * hj);
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

}  // namespace

ControlSet ControlSet::box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
    if (lo.size() == 0 || lo.size() != hi.size()) {
        throw DomainError("ControlSet::box: bounds must be non-empty and of equal length");
    }
    if ((lo.array() > hi.array()).any()) {
        throw DomainError("ControlSet::box: lower bound exceeds upper bound");
    }
    return ControlSet(Box{std::move(lo), std::move(hi)});
}

ControlSet ControlSet::finite_grid(std::vector<Eigen::VectorXd> points) {
    if (points.empty()) {
        throw DomainError("ControlSet::finite_grid: need at least one point");
    }
    for (const auto& p : points) {
        if (p.size() != points.front().size() || p.size() == 0) {
            throw DomainError("ControlSet::finite_grid: points must share a positive dimension");
        }
    }
    return ControlSet(FiniteGrid{std::move(points)});
}

std::size_t ControlSet::dim() const noexcept {
    if (const auto* b = as_box()) return static_cast<std::size_t>(b->lo.size());
    return static_cast<std::size_t>(as_grid()->points.front().size());
}

Eigen::VectorXd ControlSet::project(const Eigen::VectorXd& u) const {
    if (static_cast<std::size_t>(u.size()) != dim()) {
        throw DomainError("ControlSet::project: dimension mismatch");
    }
    if (const auto* b = as_box()) {
        return u.cwiseMax(b->lo).cwiseMin(b->hi);
    }
    const auto& pts = as_grid()->points;
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d = (pts[i] - u).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return pts[best];
}

bool ControlSet::contains(const Eigen::VectorXd& u, double tol) const {
    if (static_cast<std::size_t>(u.size()) != dim()) return false;
    if (const auto* b = as_box()) {
        return ((u.array() >= b->lo.array() - tol) && (u.array() <= b->hi.array() + tol)).all();
    }
    for (const auto& p : as_grid()->points) {
        if ((p - u).cwiseAbs().maxCoeff() <= tol) return true;
    }
    return false;
}

std::vector<Eigen::VectorXd> ControlSet::enumerate(std::size_t points_per_dim) const {
    if (const auto* g = as_grid()) return g->points;
    if (points_per_dim == 0) return {};
    const auto* b = as_box();
    const auto m = static_cast<std::size_t>(b->lo.size());
    std::size_t total = 1;
    for (std::size_t i = 0; i < m; ++i) total *= points_per_dim;
    std::vector<Eigen::VectorXd> out;
    out.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        Eigen::VectorXd u(static_cast<Eigen::Index>(m));
        std::size_t rem = idx;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t k = rem % points_per_dim;
            rem /= points_per_dim;
            const auto ii = static_cast<Eigen::Index>(i);
            u[ii] = points_per_dim == 1
                        ? 0.5 * (b->lo[ii] + b->hi[ii])
                        : b->lo[ii] + (b->hi[ii] - b->lo[ii]) * static_cast<double>(k) /
                                          static_cast<double>(points_per_dim - 1);
        }
        out.push_back(std::move(u));
    }
    return out;
}

Eigen::MatrixXd Scenario::drift_x(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (derivatives.drift_x) return (*derivatives.drift_x)(t, x, u);
    return jacobian([&](const Eigen::VectorXd& z) { return drift(t, z, u); }, x);
}

Eigen::MatrixXd Scenario::drift_u(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (derivatives.drift_u) return (*derivatives.drift_u)(t, x, u);
    return jacobian([&](const Eigen::VectorXd& z) { return drift(t, x, z); }, u);
}

Eigen::MatrixXd Scenario::diffusion_x(double t, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u) const {
    if (derivatives.diffusion_x) return (*derivatives.diffusion_x)(t, x, u);
    return jacobian([&](const Eigen::VectorXd& z) { return diffusion(t, z, u); }, x);
}

Eigen::MatrixXd Scenario::diffusion_u(double t, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u) const {
    if (derivatives.diffusion_u) return (*derivatives.diffusion_u)(t, x, u);
    return jacobian([&](const Eigen::VectorXd& z) { return diffusion(t, x, z); }, u);
}

Eigen::VectorXd Scenario::cost_x(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (derivatives.cost_x) return (*derivatives.cost_x)(t, x, u);
    return gradient([&](const Eigen::VectorXd& z) { return running_cost(t, z, u); }, x);
}

Eigen::VectorXd Scenario::cost_u(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (derivatives.cost_u) return (*derivatives.cost_u)(t, x, u);
    return gradient([&](const Eigen::VectorXd& z) { return running_cost(t, x, z); }, u);
}

Eigen::MatrixXd Scenario::cost_xx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (derivatives.cost_xx) return (*derivatives.cost_xx)(t, x, u);
    return hessian([&](const Eigen::VectorXd& z) { return running_cost(t, z, u); }, x);
}

Eigen::VectorXd Scenario::terminal_x(const Eigen::VectorXd& x) const {
    if (derivatives.terminal_x) return (*derivatives.terminal_x)(x);
    return gradient(terminal_cost, x);
}

Eigen::MatrixXd Scenario::terminal_xx(const Eigen::VectorXd& x) const {
    if (derivatives.terminal_xx) return (*derivatives.terminal_xx)(x);
    return hessian(terminal_cost, x);
}

Eigen::MatrixXd Scenario::drift_xx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& w) const {
    if (derivatives.drift_xx) return (*derivatives.drift_xx)(t, x, u, w);
    return hessian([&](const Eigen::VectorXd& z) { return w.dot(drift(t, z, u)); }, x);
}

Eigen::MatrixXd Scenario::diffusion_xx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                       const Eigen::VectorXd& w) const {
    if (derivatives.diffusion_xx) return (*derivatives.diffusion_xx)(t, x, u, w);
    return hessian([&](const Eigen::VectorXd& z) { return w.dot(diffusion(t, z, u)); }, x);
}

double lipschitz_spot_check(const Scenario& scenario, std::size_t n_samples, std::uint64_t seed,
                            double radius) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> time(0.0, 1.0);
    const auto n = static_cast<Eigen::Index>(scenario.n());
    const auto m = static_cast<Eigen::Index>(scenario.control_dim);
    double worst = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        Eigen::VectorXd x1(n), x2(n), u(m);
        for (Eigen::Index i = 0; i < n; ++i) {
            x1[i] = radius * unit(gen);
            x2[i] = radius * unit(gen);
        }
        for (Eigen::Index i = 0; i < m; ++i) u[i] = radius * unit(gen);
        u = scenario.control_set.project(u);
        const double t = time(gen);
        const double dx = (x1 - x2).norm();
        if (dx == 0.0) continue;
        worst = std::max(worst, (scenario.drift(t, x1, u) - scenario.drift(t, x2, u)).norm() / dx);
        worst = std::max(worst,
                         (scenario.diffusion(t, x1, u) - scenario.diffusion(t, x2, u)).norm() / dx);
    }
    return worst;
}

ControlProcess ControlProcess::open_loop(Eigen::MatrixXd values) {
    ControlProcess c;
    c.control_dim_ = static_cast<std::size_t>(values.cols());
    c.shared_ = std::move(values);
    return c;
}

ControlProcess ControlProcess::open_loop_per_path(PathField values) {
    ControlProcess c;
    c.control_dim_ = values.dim();
    c.per_path_ = std::move(values);
    return c;
}

ControlProcess ControlProcess::constant(const Eigen::VectorXd& u, std::size_t n_steps) {
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n_steps), u.size());
    values.rowwise() = u.transpose();
    return open_loop(std::move(values));
}

ControlProcess ControlProcess::feedback(FeedbackLaw law, std::size_t control_dim) {
    ControlProcess c;
    c.control_dim_ = control_dim;
    c.law_ = std::move(law);
    return c;
}

Eigen::VectorXd ControlProcess::value(std::size_t path, std::size_t step, double t,
                                      const Eigen::VectorXd& x) const {
    if (law_) return law_(step, t, x);
    if (!per_path_.empty()) {
        if (path >= per_path_.n_paths() || step >= per_path_.n_times()) {
            throw DomainError("ControlProcess: per-path control has too few paths or steps");
        }
        return per_path_.at(path, step);
    }
    if (static_cast<Eigen::Index>(step) >= shared_.rows()) {
        throw DomainError("ControlProcess: open-loop control has too few steps");
    }
    return shared_.row(static_cast<Eigen::Index>(step)).transpose();
}

}  // namespace smpkit
