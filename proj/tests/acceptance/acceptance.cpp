// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.

#include "smpkit/adjoint_bsde.hpp"
#include "smpkit/error.hpp"
#include "smpkit/maximum_principle.hpp"
#include "smpkit/scenarios.hpp"
#include "smpkit/second_adjoint.hpp"
#include "smpkit/studies.hpp"
#include "smpkit/transposition.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using namespace smpkit;

namespace {

constexpr std::uint64_t kSeed = 7;
const RegressionBasis kBasis(2, 4, 1e-8);

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double worst_ratio(const std::vector<IdentityReport>& reports) {
    double w = 0.0;
    for (const auto& r : reports) {
        w = std::max(w, std::abs(r.residual) / (r.bias_budget + 3.0 * r.std_error));
    }
    return w;
}

Outcome criterion_1() {
    Outcome out{true, ""};
    for (const std::string name : {"lq_scalar", "heat"}) {
        const Stopwatch clock;
        const Preset preset = load_preset(name);
        const PassRule rule = preset.rule("first_order");
        std::vector<double> ladder;
        bool pass_at_200 = false;
        double ratio = 0.0;
        for (const Level& level : refinement_ladder()) {
            const PresetRun run = run_preset(preset, level, kSeed, kBasis);
            const IdentityStudy s = first_identity_study(run, preset, 20, kSeed, rule);
            ladder.push_back(s.mean_abs_residual);
            if (level.dt == 0.005) {
                pass_at_200 = s.all_pass;
                ratio = worst_ratio(s.reports);
            }
        }
        const bool decreasing = ladder[1] < ladder[0] && ladder[2] < ladder[1];
        const double secs = clock.seconds();
        const bool ok = pass_at_200 && decreasing && secs <= 120.0;
        out.pass = out.pass && ok;
        out.detail += name + ": 20/20 " + (pass_at_200 ? "pass" : "FAIL") + " (worst |res|/tol " +
                      fmt("%.2f", ratio) + "), ladder " + fmt("%.2e", ladder[0]) + " > " + fmt("%.2e", ladder[1]) +
                      " > " + fmt("%.2e", ladder[2]) + (decreasing ? "" : " NOT DECREASING") + ", " +
                      fmt("%.1f", secs) + " s; ";
    }
    return out;
}

Outcome criterion_2() {
    const Stopwatch clock;
    Outcome out{true, ""};
    const Level level{0.005, 10000};
    for (const std::string name : {"cubic_scalar", "heat"}) {
        const Preset preset = load_preset(name);
        const PresetRun run = run_preset(preset, level, kSeed, kBasis);
        const IdentityStudy s =
            second_identity_study(run, preset, kBasis, 20, kSeed, preset.rule("second_order"));
        out.pass = out.pass && s.all_pass;
        out.detail += name + " (n=" + std::to_string(preset.scenario.n()) + "): " + (s.all_pass ? "pass" : "FAIL") +
                      " (worst |res|/tol " + fmt("%.2f", worst_ratio(s.reports)) + "); ";
    }
    // xi-only reduction against the Lyapunov oracle on deterministic-coefficient data.
    for (const std::string name : {"lq_scalar", "heat"}) {
        const Preset preset = load_preset(name);
        const PresetRun run = run_preset(preset, level, kSeed, kBasis);
        const auto& sc = preset.scenario;
        const SecondOrderData data = second_order_data(sc, run.trajectory, run.first);
        if (!data.is_deterministic()) throw Error(name + ": second-order data is not deterministic");
        const auto P = lyapunov_oracle(sc.op, data.J, data.K, data.F, data.terminal.at(0, 0), run.grid);
        const SecondOrderAdjoint oracle{run.grid, run.ens.id(), MatrixProcess::deterministic(P),
                                        MatrixProcess::zero(sc.n(), run.grid.n_steps()), 0.0, {}};
        const PassRule rule = preset.rule("second_order");
        std::vector<IdentityReport> reports;
        bool ok = true;
        for (std::size_t i = 0; i < 20; ++i) {
            SecondOrderTest test = random_second_test(i, kSeed, run.trajectory, run.ens);
            test.u1 = test.u2 = test.v1 = test.v2 = nullptr;
            reports.push_back(verify_second_identity(oracle, sc.op, data, test, run.ens, rule));
            ok = ok && reports.back().pass;
        }
        out.pass = out.pass && ok;
        out.detail += name + " reduction vs Lyapunov: " + (ok ? "pass" : "FAIL") + " (worst |res|/tol " +
                      fmt("%.2f", worst_ratio(reports)) + "); ";
    }
    const double secs = clock.seconds();
    out.pass = out.pass && secs <= 300.0;
    out.detail += fmt("%.1f s", secs);
    return out;
}

/// int_t^T e^{mu (s - t)} cos(omega s) ds.
double damped_cosine_integral(double mu, double omega, double t, double T) {
    const std::complex<double> z(mu, omega);
    return std::real(std::exp(-mu * t) * (std::exp(z * T) - std::exp(z * t)) / z);
}

Outcome criterion_3() {
    Outcome out{true, ""};
    // dy = -(A^T y - f) dt + Y dw with f = c cos(omega t), deterministic terminal value.
    const OperatorSpec op = make_dirichlet_laplacian(3, 1.0);
    const Eigen::Vector3d yT(1.0, -0.5, 0.25);
    const Eigen::Vector3d c(2.0, 1.0, -3.0);
    const double omega = 2.0 * std::numbers::pi;
    const double T = 1.0;
    for (const std::size_t steps : {100, 200}) {
        const auto ens = sample_brownian(TimeGrid(0.0, T, steps), 1000, kSeed);
        const double dt = ens.grid().dt();
        PathField conditioning(ens.n_paths(), steps + 1, 1);
        PathField terminal(ens.n_paths(), 1, 3);
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            terminal.at(p, 0) = yT;
            for (std::size_t j = 0; j <= steps; ++j) conditioning.at(p, j)[0] = ens.level(p, j);
        }
        BsdeDriver f = [&](std::size_t, std::size_t j, const Eigen::VectorXd&, const Eigen::VectorXd&,
                           Eigen::Ref<Eigen::VectorXd> o) { o = c * std::cos(omega * static_cast<double>(j) * dt); };
        const BsdeSolution sol =
            solve_bsde(op.semigroup_factors(dt), terminal, f, conditioning, ens, RegressionBasis());
        double err = 0.0;
        for (std::size_t j = 0; j <= steps; ++j) {
            const double t = ens.grid().t(j);
            for (Eigen::Index k = 0; k < 3; ++k) {
                const double mu = op.eigenvalue(static_cast<std::size_t>(k));
                const double exact = std::exp(mu * (T - t)) * yT[k] - c[k] * damped_cosine_integral(mu, omega, t, T);
                for (std::size_t p : {std::size_t{0}, ens.n_paths() - 1}) {
                    err = std::max(err, std::abs(sol.y.at(p, j)[k] - exact));
                }
            }
        }
        const double bound = 2.0 * dt * c.cwiseAbs().maxCoeff() * T;
        const bool ok = err <= bound;
        out.pass = out.pass && ok;
        out.detail += "dt=1/" + std::to_string(steps) + ": max err " + fmt("%.2e", err) + " vs bound " +
                      fmt("%.2e", bound) + "; ";
    }
    {
        const double kappa = 0.5, pT = 2.0;
        const auto ens = sample_brownian(TimeGrid(0.0, T, 400), 400, kSeed);
        StateEnsemble cond{ens.grid(), ens.id(), PathField(ens.n_paths(), 401, 1), PathField()};
        for (std::size_t p = 0; p < ens.n_paths(); ++p) {
            for (std::size_t j = 0; j <= 400; ++j) cond.states.at(p, j)[0] = ens.level(p, j);
        }
        const SecondOrderData d{MatrixProcess::zero(1, 400),
                                MatrixProcess::constant(Eigen::MatrixXd::Constant(1, 1, kappa), 400),
                                MatrixProcess::zero(1, 400),
                                MatrixProcess::constant(Eigen::MatrixXd::Constant(1, 1, pT), 1)};
        const auto sa = solve_second_adjoint(OperatorSpec({0.0}), d, cond, ens, RegressionBasis());
        double rel = 0.0;
        for (std::size_t j = 0; j <= 400; ++j) {
            const double exact = pT * std::exp(kappa * kappa * (T - ens.grid().t(j)));
            rel = std::max(rel, std::abs(sa.P.at(0, j)(0, 0) - exact) / exact);
        }
        const bool ok = rel <= 0.01;
        out.pass = out.pass && ok;
        out.detail += "matrix BSDE max rel err " + fmt("%.2e", rel) + " at dt=1/400";
    }
    return out;
}

Outcome criterion_4() {
    const Preset preset = load_preset("lq_scalar");
    const PresetRun run = run_preset(preset, Level{0.005, 10000}, kSeed, kBasis, "zero");
    const IdentityStudy s = gradient_study(run, preset, kBasis, 5, kSeed, 0.1, preset.rule("gradient"));
    std::string detail;
    for (const auto& r : s.reports) {
        detail += fmt("%.3e", r.lhs) + " vs " + fmt("%.3e", r.rhs) + (r.pass ? "" : " FAIL") + "; ";
    }
    return {s.all_pass, "5 directions around u = 0 (MC pairing vs central FD): " + detail +
                            "worst |res|/tol " + fmt("%.2f", worst_ratio(s.reports))};
}

Outcome criterion_5() {
    const Stopwatch clock;
    const Preset preset = load_preset("lq_scalar");
    const TimeGrid grid = TimeGrid::from_dt(preset.T, 0.005);
    const auto ens = sample_brownian(grid, 20000, kSeed);
    const OptimizerResult res = projected_gradient(preset.scenario, preset.x0, preset_control(preset, grid, "zero"),
                                                   StepRule{}, 200, ens, kBasis);
    const double v = riccati_oracle(*preset.lq, grid).value_at(preset.x0);
    const double J = res.history.back().J;
    const double gap = std::abs(J - v) / v;
    const double secs = clock.seconds();
    const std::size_t iters = res.history.back().iter;
    const bool ok = gap <= 0.02 && iters <= 200 && secs <= 180.0;
    return {ok, "J " + fmt("%.5f", J) + " vs Riccati " + fmt("%.5f", v) + " (gap " + fmt("%.2f%%", 100 * gap) +
                    "), " + std::to_string(iters) + " iterations, stop " + res.stop_reason + ", " +
                    fmt("%.1f s", secs)};
}

Outcome criterion_6() {
    const Preset preset = load_preset("lq_scalar");
    const TimeGrid grid = TimeGrid::from_dt(preset.T, 0.005);
    const auto ens = sample_brownian(grid, 10000, kSeed);
    const ControlProcess ubar = preset_control(preset, grid, "riccati");
    const SpikeTable table = spike_experiment(preset.scenario, preset.x0, ubar, Eigen::VectorXd::Zero(1),
                                              preset.T / 3.0, {0.2, 0.1, 0.05, 0.025}, ens, kBasis);
    std::string detail = "remainder/eps:";
    for (const auto& r : table.rows) detail += " " + fmt("%.4f", r.remainder_over_epsilon);
    detail += " (" + std::to_string(table.inversions) + " inversions); ";

    const PresetRun run = run_preset(preset, Level{0.005, 10000}, kSeed, kBasis, "riccati");
    const auto& sc = preset.scenario;
    const SecondOrderData data = second_order_data(sc, run.trajectory, run.first);
    const SecondOrderAdjoint sa = solve_second_adjoint(sc.op, data, run.trajectory, run.ens, kBasis);
    const MPReport mp = check_condition(sc, run.trajectory, run.first, sa, sc.control_set.enumerate(21),
                                        uniform_time_grid(run.grid.n_steps(), 8), preset.rule("mp"));
    detail += "S(t,u) on 21x8 grid: " + std::string(mp.pass ? "pass" : "FAIL") + " (min mean " +
              fmt("%.3e", mp.entries[mp.worst].mean) + ")";
    return {table.inversions <= 1 && mp.pass, detail};
}

Outcome criterion_7() {
    const Preset preset = load_preset("cubic_scalar");
    const PresetRun run = run_preset(preset, Level{0.01, 4000}, kSeed, kBasis);
    const auto& sc = preset.scenario;
    const SecondOrderData data = second_order_data(sc, run.trajectory, run.first);
    const auto dir = MatrixProcess::constant(Eigen::MatrixXd::Ones(1, 1), run.grid.n_steps());
    const BrownianEnsemble& ens = run.ens;
    std::vector<VectorProcess> probes{
        [](std::size_t, std::size_t, Eigen::Ref<Eigen::VectorXd> o) { o[0] = 1.0; },
        [&ens](std::size_t p, std::size_t j, Eigen::Ref<Eigen::VectorXd> o) { o[0] = ens.level(p, j); },
    };
    const LipschitzReport rep =
        lipschitz_probe(sc.op, data, dir, {0.2, 0.1, 0.05}, probes, run.trajectory, ens, kBasis);
    std::string detail = "discrepancy/delta:";
    for (const auto& r : rep.rows) detail += " " + fmt("%.4f", r.ratio);
    return {rep.pass && rep.spread <= 2.0, detail + ", spread " + fmt("%.3f", rep.spread)};
}

Outcome criterion_8() {
    const Preset preset = load_preset("lq_scalar");
    const TimeGrid grid = TimeGrid::from_dt(preset.T, 0.005);
    const auto& lq = *preset.lq;
    const double x0 = preset.x0[0];
    const double half = std::abs(x0) + 6.0 * std::abs(lq.sigma[0]) * std::sqrt(lq.T);
    const auto* box = preset.scenario.control_set.as_box();
    const double ric = riccati_oracle(lq, grid).value_at(preset.x0);
    const OracleBundle dp = dp_oracle_scalar(preset.scenario, uniform_lattice(-half, half, 401),
                                             uniform_lattice(box->lo[0], box->hi[0], 41), grid, x0);
    const double v = dp.value_at(preset.x0);
    const double gap = std::abs(v - ric) / ric;
    return {gap <= 0.02, "Riccati " + fmt("%.5f", ric) + ", DP " + fmt("%.5f", v) + " (gap " +
                             fmt("%.2f%%", 100 * gap) + ")"};
}

int run_command(const std::string& args) {
    const std::string cmd = std::string(SMPKIT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Number of differing artifacts between two output directories, timing.txt excluded.
std::size_t compare_dirs(const fs::path& a, const fs::path& b, std::size_t& compared) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
    for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
    std::size_t diff = 0;
    for (const auto& n : names) {
        if (n == "timing.txt") continue;
        ++compared;
        if (!fs::exists(a / n) || !fs::exists(b / n) || slurp(a / n) != slurp(b / n)) ++diff;
    }
    return diff;
}

Outcome criterion_9() {
    const fs::path root = fs::temp_directory_path() / "smpkit_acceptance_determinism";
    fs::remove_all(root);
    const std::vector<std::string> commands{
        "simulate-forward --preset heat",
        "solve-adjoint --preset heat",
        "solve-second-adjoint --preset cubic_scalar",
        "verify-duality --preset lq_scalar --tests 5",
        "check-mp --preset lq_scalar",
        "optimize --preset lq_scalar --max-iters 5",
        "spike-experiment --preset lq_scalar",
        "cross-validate-oracles --preset lq_scalar",
    };
    std::size_t compared = 0, diff = 0, idx = 0;
    bool ran = true;
    for (const auto& c : commands) {
        const std::string base = c + " --dt 0.01 --paths 2000 --seed 7";
        const fs::path d = root / std::to_string(idx++);
        const int r1 = run_command(base + " --workers 1 --out " + (d / "a").string());
        const int r2 = run_command(base + " --workers 1 --out " + (d / "b").string());
        const int r3 = run_command(base + " --workers 2 --out " + (d / "c").string());
        ran = ran && r1 == r2 && r2 == r3 && r1 >= 0 && r1 <= 1;
        diff += compare_dirs(d / "a", d / "b", compared);
        diff += compare_dirs(d / "a", d / "c", compared);
    }
    fs::remove_all(root);
    return {ran && diff == 0 && compared > 0,
            std::to_string(commands.size()) + " commands, " + std::to_string(compared) +
                " artifact comparisons (rerun and --workers 1 vs 2), " + std::to_string(diff) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, criterion_1}, {2, criterion_2}, {3, criterion_3}, {4, criterion_4}, {5, criterion_5},
        {6, criterion_6}, {7, criterion_7}, {8, criterion_8}, {9, criterion_9},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::printf("criterion %d: %s  %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failed;
    }
    return failed == 0 ? 0 : 1;
}
