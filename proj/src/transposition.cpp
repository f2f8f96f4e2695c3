#include "smpkit/transposition.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace smpkit {

IdentityReport make_identity_report(std::string identity, const std::vector<double>& lhs,
                                    const std::vector<double>& rhs, double dt, const PassRule& rule) {
    if (lhs.size() != rhs.size() || lhs.empty()) {
        throw DomainError("make_identity_report: per-path sides must be non-empty and equal in size");
    }
    std::vector<double> diff(lhs.size());
    double scale = 0.0;
    for (std::size_t p = 0; p < lhs.size(); ++p) {
        diff[p] = lhs[p] - rhs[p];
        scale += std::abs(lhs[p]) + std::abs(rhs[p]);
    }
    scale /= static_cast<double>(lhs.size());
    IdentityReport r;
    r.identity = std::move(identity);
    r.n_paths = lhs.size();
    r.dt = dt;
    r.lhs = kernels::moments(lhs).mean;
    r.rhs = kernels::moments(rhs).mean;
    const auto m = kernels::moments(diff);
    r.residual = m.mean;
    r.std_error = m.std_error;
    // Round-off floor, so that checks with deterministic sides do not demand exact equality.
    r.bias_budget = rule.c_bias * dt + 1e-12 * scale;
    r.pass = std::abs(r.residual) <= rule.k_sigma * r.std_error + r.bias_budget;
    return r;
}

PathField driver_values(const BsdeDriver& driver, const AdjointPair& pair) {
    const std::size_t n_paths = pair.y.n_paths();
    const std::size_t n_steps = pair.grid.n_steps();
    const std::size_t n = pair.y.dim();
    PathField out(n_paths, n_steps, n);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        Eigen::VectorXd f(n);
        for (std::size_t j = 0; j < n_steps; ++j) {
            driver(p, j, pair.y.at(p, j), pair.Y.at(p, j), f);
            out.at(p, j) = f;
        }
    });
    return out;
}

namespace {

void require_same_ensemble(const EnsembleId& id, const BrownianEnsemble& ens, const char* what) {
    if (!(id == ens.id())) {
        throw IdentityInvalidError(std::string(what) + ": adjoint and test ensembles differ");
    }
}

void eval(const VectorProcess& v, std::size_t p, std::size_t j, Eigen::VectorXd& out) {
    out.setZero();
    if (v) v(p, j, out);
}

}  // namespace

IdentityReport verify_first_identity(const AdjointPair& pair, const OperatorSpec& op,
                                     const PathField& f_values, const FirstOrderTest& test,
                                     const BrownianEnsemble& ens, const PassRule& rule) {
    require_same_ensemble(pair.id, ens, "verify_first_identity");
    const std::size_t n = op.n_modes();
    const std::size_t n_steps = ens.n_steps();
    const std::size_t n_paths = ens.n_paths();
    if (pair.y.dim() != n || f_values.dim() != n || f_values.n_paths() != n_paths ||
        f_values.n_times() != n_steps) {
        throw DomainError("verify_first_identity: data shape mismatch");
    }
    if (test.t_index > n_steps) {
        throw DomainError("verify_first_identity: t_index outside the grid");
    }
    const double dt = ens.grid().dt();
    const LinearizedStepper stepper(op, nullptr, nullptr, test.v1, test.v2, ens);
    std::vector<double> lhs(n_paths), rhs(n_paths);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        Eigen::VectorXd z = test.eta.at(p);
        require_dimension(op, z, "verify_first_identity: eta");
        Eigen::VectorXd v1(n), v2(n), next(n);
        double l = 0.0;
        double r = z.dot(pair.y.at(p, test.t_index));
        for (std::size_t j = test.t_index; j < n_steps; ++j) {
            eval(test.v1, p, j, v1);
            eval(test.v2, p, j, v2);
            l -= z.dot(f_values.at(p, j)) * dt;
            r += (v1.dot(pair.y.at(p, j)) + v2.dot(pair.Y.at(p, j))) * dt;
            stepper.advance_with(p, j, z, v1, v2, next);
        }
        l += z.dot(pair.y.at(p, n_steps));
        lhs[p] = l;
        rhs[p] = r;
    });
    return make_identity_report("first_order", lhs, rhs, dt, rule);
}

IdentityReport verify_second_identity(const SecondOrderAdjoint& sa, const OperatorSpec& op,
                                      const SecondOrderData& data, const SecondOrderTest& test,
                                      const BrownianEnsemble& ens, const PassRule& rule) {
    require_same_ensemble(sa.id, ens, "verify_second_identity");
    const std::size_t n = op.n_modes();
    const std::size_t n_steps = ens.n_steps();
    const std::size_t n_paths = ens.n_paths();
    if (sa.P.n() != n || data.F.n() != n) {
        throw DomainError("verify_second_identity: data dimension mismatch");
    }
    if (test.t_index > n_steps) {
        throw DomainError("verify_second_identity: t_index outside the grid");
    }
    const double dt = ens.grid().dt();
    const LinearizedStepper s1(op, &data.J, &data.K, test.u1, test.v1, ens);
    const LinearizedStepper s2(op, &data.J, &data.K, test.u2, test.v2, ens);
    std::vector<double> lhs(n_paths), rhs(n_paths);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        Eigen::VectorXd x1 = test.xi1.at(p);
        Eigen::VectorXd x2 = test.xi2.at(p);
        require_dimension(op, x1, "verify_second_identity: xi1");
        require_dimension(op, x2, "verify_second_identity: xi2");
        Eigen::VectorXd u1(n), u2(n), v1(n), v2(n), next(n);
        Eigen::VectorXd Kx1(n), Kx2(n), a(n), b(n);
        b.noalias() = sa.P.at(p, test.t_index) * x1;
        double l = 0.0;
        double r = x2.dot(b);
        for (std::size_t j = test.t_index; j < n_steps; ++j) {
            const auto P = sa.P.at(p, j);
            const auto Q = sa.Q.at(p, j);
            const auto K = data.K.at(p, j);
            eval(test.u1, p, j, u1);
            eval(test.u2, p, j, u2);
            eval(test.v1, p, j, v1);
            eval(test.v2, p, j, v2);
            a.noalias() = data.F.at(p, j) * x1;
            l -= x2.dot(a) * dt;
            Kx1.noalias() = K * x1;
            Kx2.noalias() = K * x2;
            Kx2 += v2;
            double acc = 0.0;
            a.noalias() = P * u1;
            acc += x2.dot(a);
            a.noalias() = P * x1;
            acc += u2.dot(a);
            a.noalias() = P * Kx1;
            acc += v2.dot(a);
            a.noalias() = P * v1;
            acc += Kx2.dot(a);
            a.noalias() = Q * v1;
            acc += x2.dot(a);
            a.noalias() = Q * x1;
            acc += v2.dot(a);
            r += acc * dt;
            s1.advance_with(p, j, x1, u1, v1, next);
            s2.advance_with(p, j, x2, u2, v2, next);
        }
        b.noalias() = data.terminal.at(p, 0) * x1;
        l += x2.dot(b);
        lhs[p] = l;
        rhs[p] = r;
    });
    return make_identity_report("second_order", lhs, rhs, dt, rule);
}

std::vector<std::size_t> identity_time_grid(std::size_t n_steps) {
    return {0, n_steps / 4, n_steps / 2, 3 * n_steps / 4};
}

namespace {

struct TestRng {
    std::mt19937_64 gen;
    std::normal_distribution<double> normal{0.0, 1.0};
    TestRng(std::uint64_t seed, std::size_t index)
        : gen([&] {
              std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                                static_cast<std::uint32_t>(index), 0x7e57u};
              return std::mt19937_64(seq);
          }()) {}
    Eigen::VectorXd vec(std::size_t n) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(n));
        for (auto& e : v) e = normal(gen);
        return v;
    }
    double frequency() { return std::uniform_real_distribution<double>(1.0, 2.0 * std::numbers::pi)(gen); }
};

InitialState affine_in_state(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                             const StateEnsemble& trajectory, std::size_t t_index) {
    std::vector<SpectralVector> values(trajectory.states.n_paths());
    for (std::size_t p = 0; p < values.size(); ++p) {
        values[p] = a + b.cwiseProduct(trajectory.states.at(p, t_index));
    }
    return InitialState(std::move(values));
}

VectorProcess sine_plus_level(Eigen::VectorXd c, Eigen::VectorXd d, double omega, bool cosine,
                              const BrownianEnsemble& ens) {
    const BrownianEnsemble* e = &ens;
    std::vector<double> wave(ens.n_steps() + 1);
    for (std::size_t j = 0; j < wave.size(); ++j) {
        const double t = ens.grid().t(j);
        wave[j] = cosine ? std::cos(omega * t) : std::sin(omega * t);
    }
    return [c = std::move(c), d = std::move(d), wave = std::move(wave), e](std::size_t p, std::size_t j,
                                                                          Eigen::Ref<Eigen::VectorXd> out) {
        out = wave[j] * c;
        if (d.size() > 0) out += e->level(p, j) * d;
    };
}

}  // namespace

FirstOrderTest random_first_test(std::size_t index, std::uint64_t seed, const StateEnsemble& trajectory,
                                 const BrownianEnsemble& ens) {
    const std::size_t n = trajectory.states.dim();
    TestRng rng(seed, index);
    const auto grid = identity_time_grid(ens.n_steps());
    FirstOrderTest t;
    t.t_index = grid[index % grid.size()];
    const Eigen::VectorXd a = rng.vec(n), b = rng.vec(n);
    t.eta = affine_in_state(a, b, trajectory, t.t_index);
    const double omega = rng.frequency();
    Eigen::VectorXd c = rng.vec(n), d = rng.vec(n), e = rng.vec(n);
    t.v1 = sine_plus_level(std::move(c), std::move(d), omega, false, ens);
    t.v2 = sine_plus_level(std::move(e), Eigen::VectorXd(), omega, true, ens);
    return t;
}

SecondOrderTest random_second_test(std::size_t index, std::uint64_t seed,
                                   const StateEnsemble& trajectory, const BrownianEnsemble& ens) {
    const std::size_t n = trajectory.states.dim();
    TestRng rng(seed, index);
    const auto grid = identity_time_grid(ens.n_steps());
    SecondOrderTest t;
    t.t_index = grid[index % grid.size()];
    const Eigen::VectorXd a1 = rng.vec(n), b1 = rng.vec(n), a2 = rng.vec(n), b2 = rng.vec(n);
    t.xi1 = affine_in_state(a1, b1, trajectory, t.t_index);
    t.xi2 = affine_in_state(a2, b2, trajectory, t.t_index);
    const double omega = rng.frequency();
    t.u1 = sine_plus_level(rng.vec(n), Eigen::VectorXd(), omega, false, ens);
    t.u2 = sine_plus_level(rng.vec(n), Eigen::VectorXd(), omega, false, ens);
    Eigen::VectorXd d1 = rng.vec(n), e1 = rng.vec(n), d2 = rng.vec(n), e2 = rng.vec(n);
    t.v1 = sine_plus_level(std::move(d1), std::move(e1), omega, true, ens);
    t.v2 = sine_plus_level(std::move(d2), std::move(e2), omega, true, ens);
    return t;
}

double q_pairing(const SecondOrderAdjoint& sa, const OperatorSpec& op, const SecondOrderData& data,
                 const VectorProcess& v, const BrownianEnsemble& ens) {
    require_same_ensemble(sa.id, ens, "q_pairing");
    const std::size_t n = op.n_modes();
    const std::size_t n_steps = ens.n_steps();
    const double dt = ens.grid().dt();
    const LinearizedStepper stepper(op, &data.J, &data.K, VectorProcess(), v, ens);
    std::vector<double> values(ens.n_paths());
    kernels::for_each_path(ens.n_paths(), [&](std::size_t p) {
        Eigen::VectorXd x1 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
        Eigen::VectorXd vj(n), zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), next(n), a(n);
        double acc = 0.0;
        for (std::size_t j = 0; j < n_steps; ++j) {
            eval(v, p, j, vj);
            a.noalias() = sa.Q.at(p, j) * x1;
            acc += vj.dot(a) * dt;
            stepper.advance_with(p, j, x1, zero, vj, next);
        }
        values[p] = acc;
    });
    return kernels::moments(values).mean;
}

LipschitzReport lipschitz_probe(const OperatorSpec& op, const SecondOrderData& base,
                                const MatrixProcess& K_direction, const std::vector<double>& deltas,
                                const std::vector<VectorProcess>& probes,
                                const StateEnsemble& conditioning, const BrownianEnsemble& ens,
                                const RegressionBasis& basis) {
    if (probes.empty()) {
        throw DomainError("lipschitz_probe: empty probe set");
    }
    const SecondOrderAdjoint sa0 = solve_second_adjoint(op, base, conditioning, ens, basis);
    std::vector<double> base_values;
    for (const auto& v : probes) base_values.push_back(q_pairing(sa0, op, base, v, ens));

    LipschitzReport report;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const double delta : deltas) {
        if (delta < 0.0) throw DomainError("lipschitz_probe: negative delta");
        SecondOrderData pert = base;
        pert.K = base.K.plus(K_direction, delta, ens.n_paths());
        const SecondOrderAdjoint sa = solve_second_adjoint(op, pert, conditioning, ens, basis);
        LipschitzRow row;
        row.delta = delta;
        for (std::size_t i = 0; i < probes.size(); ++i) {
            const double d = std::abs(q_pairing(sa, op, pert, probes[i], ens) - base_values[i]);
            row.max_discrepancy = std::max(row.max_discrepancy, d);
        }
        if (delta > 0.0) {
            row.ratio = row.max_discrepancy / delta;
            lo = std::min(lo, row.ratio);
            hi = std::max(hi, row.ratio);
        }
        report.rows.push_back(row);
    }
    if (hi > 0.0) {
        report.spread = hi / lo;
        report.pass = report.spread <= 2.0;
    } else {
        report.spread = 1.0;
        report.pass = true;
    }
    return report;
}

}  // namespace smpkit
