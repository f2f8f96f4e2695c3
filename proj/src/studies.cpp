#include "smpkit/studies.hpp"

#include "smpkit/error.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace smpkit {

std::vector<Level> refinement_ladder() { return {{0.01, 2500}, {0.005, 10000}, {0.0025, 40000}}; }

ControlProcess preset_control(const Preset& preset, const TimeGrid& grid, const std::string& kind_in) {
    const std::string kind = kind_in.empty() ? preset.default_control : kind_in;
    const auto m = static_cast<Eigen::Index>(preset.scenario.control_dim);
    if (kind == "zero") return ControlProcess::constant(Eigen::VectorXd::Zero(m), grid.n_steps());
    if (kind == "constant") {
        if (preset.control_value.size() != m) throw PresetError(preset.name + ": control_value has wrong size");
        return ControlProcess::constant(preset.control_value, grid.n_steps());
    }
    if (kind == "riccati" || kind == "perturbed") {
        if (!preset.lq) throw PresetError("control '" + kind + "' needs an LQ preset");
        const OracleBundle oracle = riccati_oracle(*preset.lq, grid);
        if (kind == "riccati") return oracle.feedback();
        const double T = grid.T();
        return ControlProcess::feedback(
            [oracle, grid, T](std::size_t step, double, const Eigen::VectorXd& x) {
                Eigen::VectorXd u = oracle.control_at(step, x);
                if (grid.t(step) < 0.25 * T) u.array() += 0.5;
                return u;
            },
            static_cast<std::size_t>(m));
    }
    throw PresetError("unknown control '" + kind + "' (riccati, zero, perturbed, constant)");
}

PresetRun run_preset(const Preset& preset, const Level& level, std::uint64_t seed, const RegressionBasis& basis,
                     const std::string& control) {
    const TimeGrid grid = TimeGrid::from_dt(preset.T, level.dt);
    basis.check_overfit(preset.scenario.n(), level.paths);
    BrownianEnsemble ens = sample_brownian(grid, level.paths, seed);
    StateEnsemble traj = simulate_controlled(preset.scenario, preset.x0, preset_control(preset, grid, control), ens);
    AdjointPair first = solve_first_adjoint(preset.scenario, traj, ens, basis);
    return {grid, std::move(ens), std::move(traj), std::move(first)};
}

IdentityStudy summarize(const Level& level, std::vector<IdentityReport> reports) {
    IdentityStudy s;
    s.level = level;
    for (const auto& r : reports) {
        s.mean_abs_residual += std::abs(r.residual);
        s.all_pass = s.all_pass && r.pass;
    }
    if (!reports.empty()) s.mean_abs_residual /= static_cast<double>(reports.size());
    s.reports = std::move(reports);
    return s;
}

IdentityStudy first_identity_study(const PresetRun& run, const Preset& preset, std::size_t n_tests,
                                   std::uint64_t test_seed, const PassRule& rule) {
    const PathField f = driver_values(first_adjoint_driver(preset.scenario, run.trajectory), run.first);
    std::vector<IdentityReport> reports;
    for (std::size_t i = 0; i < n_tests; ++i) {
        reports.push_back(verify_first_identity(run.first, preset.scenario.op, f,
                                                random_first_test(i, test_seed, run.trajectory, run.ens), run.ens,
                                                rule));
    }
    return summarize({run.grid.dt(), run.ens.n_paths()}, std::move(reports));
}

IdentityStudy second_identity_study(const PresetRun& run, const Preset& preset, const RegressionBasis& basis,
                                    std::size_t n_tests, std::uint64_t test_seed, const PassRule& rule) {
    const SecondOrderData data = second_order_data(preset.scenario, run.trajectory, run.first);
    const SecondOrderAdjoint sa = solve_second_adjoint(preset.scenario.op, data, run.trajectory, run.ens, basis);
    std::vector<IdentityReport> reports;
    for (std::size_t i = 0; i < n_tests; ++i) {
        reports.push_back(verify_second_identity(sa, preset.scenario.op, data,
                                                 random_second_test(i, test_seed, run.trajectory, run.ens), run.ens,
                                                 rule));
    }
    return summarize({run.grid.dt(), run.ens.n_paths()}, std::move(reports));
}

IdentityStudy gradient_study(const PresetRun& run, const Preset& preset, const RegressionBasis& basis,
                             std::size_t n_dirs, std::uint64_t dir_seed, double h, const PassRule& rule) {
    const PathField& control = run.trajectory.controls_used;
    const std::size_t m = control.dim();
    const std::size_t n = run.trajectory.states.dim();
    std::vector<IdentityReport> reports;
    for (std::size_t d = 0; d < n_dirs; ++d) {
        std::seed_seq seq{static_cast<std::uint32_t>(dir_seed), static_cast<std::uint32_t>(dir_seed >> 32),
                          static_cast<std::uint32_t>(d), 0x96adu};
        std::mt19937_64 gen(seq);
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> freq(1.0, 6.0);
        Eigen::VectorXd c1(static_cast<Eigen::Index>(m));
        Eigen::MatrixXd c2(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
        for (auto& e : c1) e = normal(gen);
        for (Eigen::Index i = 0; i < c2.size(); ++i) c2.data()[i] = normal(gen);
        const double omega = freq(gen);
        PathField dir(control.n_paths(), control.n_times(), m);
        for (std::size_t p = 0; p < control.n_paths(); ++p) {
            for (std::size_t j = 0; j < control.n_times(); ++j) {
                dir.at(p, j) = std::sin(omega * run.grid.t(j)) * c1 + c2 * run.trajectory.states.at(p, j);
            }
        }
        reports.push_back(gradient_consistency(preset.scenario, preset.x0, control, dir, h, run.ens, basis, rule));
    }
    return summarize({run.grid.dt(), run.ens.n_paths()}, std::move(reports));
}

double required_bias(const std::vector<IdentityReport>& reports, double k_sigma) {
    double c = 0.0;
    for (const auto& r : reports) {
        c = std::max(c, (std::abs(r.residual) - k_sigma * r.std_error) / r.dt);
    }
    return c;
}

double bias_slope_estimate(const std::vector<IdentityReport>& reports) {
    if (reports.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& r : reports) {
        sum += (r.residual * r.residual - r.std_error * r.std_error) / (r.dt * r.dt);
    }
    return std::sqrt(std::max(0.0, sum / static_cast<double>(reports.size())));
}

}  // namespace smpkit
