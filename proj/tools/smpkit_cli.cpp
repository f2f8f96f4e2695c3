#include "smpkit/csv.hpp"
#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"
#include "smpkit/maximum_principle.hpp"
#include "smpkit/scenarios.hpp"
#include "smpkit/second_adjoint.hpp"
#include "smpkit/studies.hpp"
#include "smpkit/transposition.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace smpkit;

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct RunConfig {
    std::string command;
    std::string preset = "lq_scalar";
    std::optional<std::size_t> n_modes;
    double dt = 0.005;
    std::size_t paths = 10000;
    std::uint64_t seed = 7;
    std::string out = "smpkit-out";
    int workers = 0;
    std::string control;  // empty: preset default
    int basis_degree = 2;
    std::size_t basis_modes = 4;
    double ridge = 1e-8;

    std::size_t tests = 20;
    std::string identity = "both";
    std::size_t u_grid_size = 21;
    std::size_t t_grid = 8;
    std::size_t max_iters = 200;
    double step = 0.5;
    std::string eps_list = "0.2,0.1,0.05,0.025";
    std::optional<double> tau;
    std::optional<double> u_alt;
    std::size_t lattice_size = 401;
    std::size_t dp_u_grid_size = 41;
    double tolerance = 0.02;
};

/// Resolved configuration echo; everything needed to regenerate the CSVs.
class Manifest {
public:
    void set(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
    void set(const std::string& key, double value) { set(key, format_number(value)); }
    void set(const std::string& key, std::size_t value) { set(key, std::to_string(value)); }
    void write(const fs::path& path) const {
        std::ofstream out(path, std::ios::binary);
        for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

struct Context {
    RunConfig cfg;
    Preset preset;
    TimeGrid grid;
    BrownianEnsemble ens;
    RegressionBasis basis;
    fs::path out;
    Manifest manifest;
    std::vector<std::string> failures;
};

TimeGrid grid_for(const RunConfig& cfg, double T) {
    if (!(cfg.dt > 0.0) || cfg.dt > T) throw DomainError("--dt must lie in (0, T]");
    return TimeGrid::from_dt(T, cfg.dt);
}

std::string control_kind(const Context& ctx) {
    return ctx.cfg.control.empty() ? ctx.preset.default_control : ctx.cfg.control;
}

ControlProcess make_control(const Context& ctx) { return preset_control(ctx.preset, ctx.grid, ctx.cfg.control); }

void common_manifest(Context& ctx) {
    auto& m = ctx.manifest;
    m.set("command", ctx.cfg.command);
    m.set("preset", ctx.preset.name);
    m.set("preset_file_version", ctx.preset.file.text_or("version", "1"));
    for (const auto& [k, v] : ctx.preset.file.entries()) m.set("preset." + k, v);
    m.set("n_modes", ctx.preset.scenario.n());
    m.set("T", ctx.grid.T());
    m.set("dt", ctx.grid.dt());
    m.set("n_steps", ctx.grid.n_steps());
    m.set("paths", ctx.cfg.paths);
    m.set("seed", std::to_string(ctx.cfg.seed));
    m.set("basis_degree", std::to_string(ctx.cfg.basis_degree));
    m.set("basis_modes", ctx.cfg.basis_modes);
    m.set("ridge", ctx.cfg.ridge);
}

void write_mode_stats(const fs::path& path, const PathField& field, const TimeGrid& grid) {
    CsvWriter csv(path, {"step", "t", "mode", "mean", "std_error"});
    std::vector<double> values(field.n_paths());
    for (std::size_t j = 0; j < field.n_times(); ++j) {
        for (std::size_t k = 0; k < field.dim(); ++k) {
            for (std::size_t p = 0; p < field.n_paths(); ++p) values[p] = field.at(p, j)[static_cast<Eigen::Index>(k)];
            const auto mo = kernels::moments(values);
            csv.cell(j).cell(grid.t(j)).cell(k).cell(mo.mean).cell(mo.std_error).end_row();
        }
    }
}

int cmd_simulate_forward(Context& ctx) {
    ctx.manifest.set("control", control_kind(ctx));
    const StateEnsemble traj = simulate_controlled(ctx.preset.scenario, ctx.preset.x0, make_control(ctx), ctx.ens);
    write_mode_stats(ctx.out / "forward.csv", traj.states, ctx.grid);
    const CostEstimate c = estimate_cost(ctx.preset.scenario, traj);
    CsvWriter csv(ctx.out / "cost.csv", {"J", "std_error"});
    csv.cell(c.estimate).cell(c.std_error).end_row();
    return kPass;
}

struct Solved {
    StateEnsemble traj;
    AdjointPair first;
};

Solved solve_pair(Context& ctx) {
    ctx.manifest.set("control", control_kind(ctx));
    ctx.basis.check_overfit(ctx.preset.scenario.n(), ctx.cfg.paths);
    StateEnsemble traj = simulate_controlled(ctx.preset.scenario, ctx.preset.x0, make_control(ctx), ctx.ens);
    AdjointPair first = solve_first_adjoint(ctx.preset.scenario, traj, ctx.ens, ctx.basis);
    return {std::move(traj), std::move(first)};
}

int cmd_solve_adjoint(Context& ctx) {
    const Solved s = solve_pair(ctx);
    CsvWriter csv(ctx.out / "adjoint.csv", {"step", "t", "mode", "y_mean", "y_std_error", "Y_mean", "Y_std_error"});
    const std::size_t n_paths = ctx.cfg.paths;
    std::vector<double> a(n_paths), b(n_paths);
    for (std::size_t j = 0; j <= ctx.grid.n_steps(); ++j) {
        for (std::size_t k = 0; k < ctx.preset.scenario.n(); ++k) {
            const auto kk = static_cast<Eigen::Index>(k);
            for (std::size_t p = 0; p < n_paths; ++p) {
                a[p] = s.first.y.at(p, j)[kk];
                b[p] = j < ctx.grid.n_steps() ? s.first.Y.at(p, j)[kk] : 0.0;
            }
            const auto my = kernels::moments(a);
            const auto mY = kernels::moments(b);
            csv.cell(j).cell(ctx.grid.t(j)).cell(k).cell(my.mean).cell(my.std_error);
            if (j < ctx.grid.n_steps()) {
                csv.cell(mY.mean).cell(mY.std_error);
            } else {
                csv.cell("").cell("");
            }
            csv.end_row();
        }
    }
    return kPass;
}

int cmd_solve_second_adjoint(Context& ctx) {
    const Solved s = solve_pair(ctx);
    const auto& op = ctx.preset.scenario.op;
    const SecondOrderData data = second_order_data(ctx.preset.scenario, s.traj, s.first);
    const SecondOrderAdjoint sa = solve_second_adjoint(op, data, s.traj, ctx.ens, ctx.basis);
    std::optional<std::vector<Eigen::MatrixXd>> oracle;
    if (data.is_deterministic()) {
        oracle = lyapunov_oracle(op, data.J, data.K, data.F, data.terminal.at(0, 0), ctx.grid);
    }
    CsvWriter csv(ctx.out / "second_adjoint.csv", {"step", "t", "row", "col", "P_mean", "Q_mean", "P_oracle"});
    const std::size_t n = op.n_modes();
    const std::size_t n_paths = ctx.cfg.paths;
    std::vector<double> a(n_paths), b(n_paths);
    for (std::size_t j = 0; j <= ctx.grid.n_steps(); ++j) {
        for (std::size_t c = 0; c < n; ++c) {
            for (std::size_t r = 0; r < n; ++r) {
                const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
                for (std::size_t p = 0; p < n_paths; ++p) {
                    a[p] = sa.P.at(p, j)(ri, ci);
                    b[p] = j < ctx.grid.n_steps() ? sa.Q.at(p, j)(ri, ci) : 0.0;
                }
                csv.cell(j).cell(ctx.grid.t(j)).cell(r).cell(c).cell(kernels::moments(a).mean);
                if (j < ctx.grid.n_steps()) {
                    csv.cell(kernels::moments(b).mean);
                } else {
                    csv.cell("");
                }
                if (oracle) {
                    csv.cell((*oracle)[j](ri, ci));
                } else {
                    csv.cell("");
                }
                csv.end_row();
            }
        }
    }
    for (const auto& w : sa.warnings) std::cerr << "warning: " << w << '\n';
    return kPass;
}

void write_report_row(CsvWriter& csv, const IdentityReport& r) {
    csv.cell(r.identity).cell(r.n_paths).cell(r.dt).cell(r.lhs).cell(r.rhs).cell(r.residual).cell(r.std_error).cell(r.pass);
    csv.end_row();
}

int cmd_verify_duality(Context& ctx) {
    const Solved s = solve_pair(ctx);
    const auto& sc = ctx.preset.scenario;
    ctx.manifest.set("tests", ctx.cfg.tests);
    ctx.manifest.set("identity", ctx.cfg.identity);
    const PassRule r1 = ctx.preset.rule("first_order");
    const PassRule r2 = ctx.preset.rule("second_order");
    ctx.manifest.set("k_sigma", r1.k_sigma);
    ctx.manifest.set("c_bias.first_order", r1.c_bias);
    ctx.manifest.set("c_bias.second_order", r2.c_bias);
    const fs::path path = ctx.out / "identities.csv";
    CsvWriter csv(path, {"identity", "n_paths", "dt", "lhs", "rhs", "residual", "stderr", "pass"});
    bool ok = true;
    if (ctx.cfg.identity == "first" || ctx.cfg.identity == "both") {
        const PathField f = driver_values(first_adjoint_driver(sc, s.traj), s.first);
        for (std::size_t i = 0; i < ctx.cfg.tests; ++i) {
            const auto rep = verify_first_identity(s.first, sc.op, f, random_first_test(i, ctx.cfg.seed, s.traj, ctx.ens),
                                                   ctx.ens, r1);
            write_report_row(csv, rep);
            ok = ok && rep.pass;
        }
    }
    if (ctx.cfg.identity == "second" || ctx.cfg.identity == "both") {
        const SecondOrderData data = second_order_data(sc, s.traj, s.first);
        const SecondOrderAdjoint sa = solve_second_adjoint(sc.op, data, s.traj, ctx.ens, ctx.basis);
        for (std::size_t i = 0; i < ctx.cfg.tests; ++i) {
            const auto rep = verify_second_identity(sa, sc.op, data, random_second_test(i, ctx.cfg.seed, s.traj, ctx.ens),
                                                    ctx.ens, r2);
            write_report_row(csv, rep);
            ok = ok && rep.pass;
        }
    }
    if (!ok) ctx.failures.push_back(path.string());
    return ok ? kPass : kFail;
}

int cmd_check_mp(Context& ctx) {
    const Solved s = solve_pair(ctx);
    const auto& sc = ctx.preset.scenario;
    const SecondOrderData data = second_order_data(sc, s.traj, s.first);
    const SecondOrderAdjoint sa = solve_second_adjoint(sc.op, data, s.traj, ctx.ens, ctx.basis);
    const PassRule rule = ctx.preset.rule("mp");
    ctx.manifest.set("u_grid_size", ctx.cfg.u_grid_size);
    ctx.manifest.set("t_grid", ctx.cfg.t_grid);
    ctx.manifest.set("k_sigma", rule.k_sigma);
    ctx.manifest.set("c_bias.mp", rule.c_bias);
    const auto u_grid = sc.control_set.enumerate(ctx.cfg.u_grid_size);
    const auto t_grid = uniform_time_grid(ctx.grid.n_steps(), ctx.cfg.t_grid);
    const MPReport rep = check_condition(sc, s.traj, s.first, sa, u_grid, t_grid, rule);
    const fs::path path = ctx.out / "mp.csv";
    std::vector<std::string> header{"condition", "t_index", "t"};
    for (std::size_t i = 0; i < sc.control_dim; ++i) header.push_back("u" + std::to_string(i));
    for (const char* h : {"mean", "std_error", "tolerance", "pass"}) header.emplace_back(h);
    CsvWriter csv(path, header);
    for (const auto& e : rep.entries) {
        csv.cell(rep.condition).cell(e.t_index).cell(e.t);
        for (Eigen::Index i = 0; i < e.u.size(); ++i) csv.cell(e.u[i]);
        csv.cell(e.mean).cell(e.std_error).cell(e.tolerance).cell(-e.mean <= e.tolerance).end_row();
    }
    CsvWriter summary(ctx.out / "mp_summary.csv", {"max_violation", "worst_t_index", "worst_t", "worst_mean", "pass"});
    const MPEntry& w = rep.entries[rep.worst];
    summary.cell(rep.max_violation).cell(w.t_index).cell(w.t).cell(w.mean).cell(rep.pass).end_row();
    if (!rep.pass) {
        ctx.failures.push_back(path.string());
        std::cerr << "violation at t = " << format_number(w.t) << ", u = " << format_number(w.u[0])
                  << ": mean S = " << format_number(w.mean) << '\n';
    }
    return rep.pass ? kPass : kFail;
}

int cmd_optimize(Context& ctx) {
    const auto& sc = ctx.preset.scenario;
    ctx.manifest.set("control", control_kind(ctx));
    ctx.manifest.set("max_iters", ctx.cfg.max_iters);
    ctx.manifest.set("step", ctx.cfg.step);
    ctx.manifest.set("tolerance", ctx.cfg.tolerance);
    StepRule rule;
    rule.step = ctx.cfg.step;
    const OptimizerResult res =
        projected_gradient(sc, ctx.preset.x0, make_control(ctx), rule, ctx.cfg.max_iters, ctx.ens, ctx.basis);
    CsvWriter csv(ctx.out / "optimizer.csv", {"iter", "J", "stderr", "step_norm"});
    for (const auto& h : res.history) csv.cell(h.iter).cell(h.J).cell(h.std_error).cell(h.step_norm).end_row();
    const OptimizerIterate& last = res.history.back();
    const fs::path path = ctx.out / "optimizer_summary.csv";
    CsvWriter summary(path, {"final_J", "stderr", "iterations", "stop_reason", "oracle_value", "relative_gap", "pass"});
    summary.cell(last.J).cell(last.std_error).cell(last.iter).cell(res.stop_reason);
    bool ok = true;
    if (ctx.preset.lq) {
        const double v = riccati_oracle(*ctx.preset.lq, ctx.grid).value_at(ctx.preset.x0);
        const double gap = std::abs(last.J - v) / std::abs(v);
        ok = gap <= ctx.cfg.tolerance;
        summary.cell(v).cell(gap);
    } else {
        summary.cell("").cell("");
    }
    summary.cell(ok).end_row();
    if (!ok) ctx.failures.push_back(path.string());
    return ok ? kPass : kFail;
}

int cmd_spike_experiment(Context& ctx) {
    const auto& sc = ctx.preset.scenario;
    const double tau = ctx.cfg.tau.value_or(ctx.grid.T() / 3.0);
    const auto m = static_cast<Eigen::Index>(sc.control_dim);
    const Eigen::VectorXd u_alt = sc.control_set.project(Eigen::VectorXd::Constant(m, ctx.cfg.u_alt.value_or(0.0)));
    const std::vector<double> eps = parse_number_list(ctx.cfg.eps_list);
    ctx.manifest.set("control", control_kind(ctx));
    ctx.manifest.set("tau", tau);
    ctx.manifest.set("u_alt", format_number(u_alt[0]));
    ctx.manifest.set("eps_list", ctx.cfg.eps_list);
    const SpikeTable table = spike_experiment(sc, ctx.preset.x0, make_control(ctx), u_alt, tau, eps, ctx.ens, ctx.basis);
    const fs::path path = ctx.out / "spike.csv";
    CsvWriter csv(path, {"epsilon", "tau", "J_perturbed", "J_base", "delta_J", "delta_J_stderr", "predicted",
                         "remainder", "remainder_stderr", "remainder_over_epsilon"});
    for (const auto& r : table.rows) {
        csv.cell(r.epsilon).cell(r.tau).cell(r.J_perturbed).cell(r.J_base).cell(r.delta_J).cell(r.delta_J_std_error);
        csv.cell(r.predicted).cell(r.remainder).cell(r.remainder_std_error).cell(r.remainder_over_epsilon).end_row();
    }
    const bool ok = table.inversions <= 1;
    if (!ok) ctx.failures.push_back(path.string());
    return ok ? kPass : kFail;
}

int cmd_cross_validate(Context& ctx) {
    if (!ctx.preset.lq || ctx.preset.scenario.n() != 1) {
        throw PresetError("cross-validate-oracles needs a scalar LQ preset");
    }
    const auto& lq = *ctx.preset.lq;
    const double x0 = ctx.preset.x0[0];
    const double half = std::abs(x0) + 6.0 * std::abs(lq.sigma[0]) * std::sqrt(lq.T);
    const auto lattice = uniform_lattice(-half, half, ctx.cfg.lattice_size);
    const auto* box = ctx.preset.scenario.control_set.as_box();
    std::vector<double> u_grid = uniform_lattice(box->lo[0], box->hi[0], ctx.cfg.dp_u_grid_size);
    ctx.manifest.set("lattice_size", ctx.cfg.lattice_size);
    ctx.manifest.set("lattice_half_width", half);
    ctx.manifest.set("dp_u_grid_size", ctx.cfg.dp_u_grid_size);
    ctx.manifest.set("tolerance", ctx.cfg.tolerance);
    const double v_ric = riccati_oracle(lq, ctx.grid).value_at(ctx.preset.x0);
    const OracleBundle dp = dp_oracle_scalar(ctx.preset.scenario, lattice, u_grid, ctx.grid, x0);
    const double v_dp = dp.value_at(ctx.preset.x0);
    const double gap = std::abs(v_dp - v_ric) / std::abs(v_ric);
    const fs::path path = ctx.out / "oracles.csv";
    CsvWriter csv(path, {"riccati_value", "dp_value", "relative_difference", "dp_escape_probability", "pass"});
    const bool ok = gap <= ctx.cfg.tolerance;
    csv.cell(v_ric).cell(v_dp).cell(gap).cell(dp.escape_probability).cell(ok).end_row();
    if (!ok) ctx.failures.push_back(path.string());
    return ok ? kPass : kFail;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--preset", cfg.preset, "preset name or path to a .preset file")->capture_default_str();
    sub->add_option("--n-modes", cfg.n_modes, "override the preset's mode count");
    sub->add_option("--dt", cfg.dt, "time step")->capture_default_str();
    sub->add_option("--paths", cfg.paths, "Monte Carlo paths")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "ensemble seed")->capture_default_str();
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sub->add_option("--workers", cfg.workers, "OpenMP threads (0: runtime default)")->capture_default_str();
    sub->add_option("--basis-degree", cfg.basis_degree, "regression polynomial degree")->capture_default_str();
    sub->add_option("--basis-modes", cfg.basis_modes, "modes entering the regression basis")->capture_default_str();
    sub->add_option("--ridge", cfg.ridge, "relative ridge of the regressions")->capture_default_str();
}

void add_control(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--control", cfg.control, "riccati | zero | perturbed | constant (default: preset)")
        ->check(CLI::IsMember({"riccati", "zero", "perturbed", "constant"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical toolkit for stochastic maximum principles of controlled evolution equations"};
    app.require_subcommand(1);
    RunConfig cfg;
    std::map<std::string, int (*)(Context&)> handlers{
        {"simulate-forward", cmd_simulate_forward},
        {"solve-adjoint", cmd_solve_adjoint},
        {"solve-second-adjoint", cmd_solve_second_adjoint},
        {"verify-duality", cmd_verify_duality},
        {"check-mp", cmd_check_mp},
        {"optimize", cmd_optimize},
        {"spike-experiment", cmd_spike_experiment},
        {"cross-validate-oracles", cmd_cross_validate},
    };
    std::map<std::string, std::string> help{
        {"simulate-forward", "simulate the controlled state and estimate the cost"},
        {"solve-adjoint", "solve the first-order adjoint equation"},
        {"solve-second-adjoint", "solve the second-order adjoint equation"},
        {"verify-duality", "check the first- and second-order duality identities"},
        {"check-mp", "check the spike condition of the maximum principle"},
        {"optimize", "projected-gradient optimization of an open-loop control"},
        {"spike-experiment", "spike-variation cost expansion"},
        {"cross-validate-oracles", "compare the Riccati and dynamic-programming values"},
    };
    for (const auto& [name, _] : handlers) {
        CLI::App* sub = app.add_subcommand(name, help[name]);
        add_common(sub, cfg);
        if (name != "cross-validate-oracles") add_control(sub, cfg);
        if (name == "verify-duality") {
            sub->add_option("--tests", cfg.tests, "randomized test tuples per identity")->capture_default_str();
            sub->add_option("--identity", cfg.identity, "first | second | both")
                ->check(CLI::IsMember({"first", "second", "both"}))
                ->capture_default_str();
        }
        if (name == "check-mp") {
            sub->add_option("--u-grid-size", cfg.u_grid_size, "control points per dimension")->capture_default_str();
            sub->add_option("--t-grid", cfg.t_grid, "number of checked time points")->capture_default_str();
        }
        if (name == "optimize") {
            sub->add_option("--max-iters", cfg.max_iters, "iteration cap")->capture_default_str();
            sub->add_option("--step", cfg.step, "gradient step")->capture_default_str();
            sub->add_option("--tolerance", cfg.tolerance, "relative gap to the oracle value")->capture_default_str();
        }
        if (name == "spike-experiment") {
            sub->add_option("--eps-list", cfg.eps_list, "decreasing spike widths")->capture_default_str();
            sub->add_option("--tau", cfg.tau, "spike start (default T/3)");
            sub->add_option("--u-alt", cfg.u_alt, "spike control value (default 0)");
        }
        if (name == "cross-validate-oracles") {
            sub->add_option("--lattice-size", cfg.lattice_size, "state lattice points")->capture_default_str();
            sub->add_option("--u-grid-size", cfg.dp_u_grid_size, "control grid points")->capture_default_str();
            sub->add_option("--tolerance", cfg.tolerance, "relative agreement")->capture_default_str();
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsage;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    if (cfg.command == "optimize" && cfg.control.empty()) cfg.control = "zero";

    const auto start = std::chrono::steady_clock::now();
    try {
        if (cfg.workers < 0) throw DomainError("--workers must be non-negative");
        kernels::set_workers(cfg.workers);
        Preset preset = load_preset(cfg.preset, cfg.n_modes);
        const TimeGrid grid = grid_for(cfg, preset.T);
        if (cfg.paths < 2) throw DomainError("--paths must be at least 2");
        BrownianEnsemble ens = sample_brownian(grid, cfg.paths, cfg.seed);
        Context ctx{cfg,
                    std::move(preset),
                    grid,
                    std::move(ens),
                    RegressionBasis(cfg.basis_degree, cfg.basis_modes, cfg.ridge),
                    cfg.out,
                    {},
                    {}};
        fs::create_directories(ctx.out);
        common_manifest(ctx);
        const int status = handlers.at(cfg.command)(ctx);
        ctx.manifest.write(ctx.out / "manifest.txt");
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        {
            std::ofstream timing(ctx.out / "timing.txt", std::ios::binary);
            timing << "wall_seconds = " << format_number(wall) << '\n'
                   << "workers = " << kernels::workers() << '\n';
        }
        for (const auto& f : ctx.failures) std::cerr << "pass rule failed: " << f << '\n';
        return status;
    } catch (const PresetError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
}
