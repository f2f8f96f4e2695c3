// Prints bias constants c_bias.<check> for a preset over the three-level
// refinement ladder: safety times the larger of the smallest slope that lets
// every calibration check pass at k_sigma and the RMS bias slope estimated
// from all calibration reports pooled. Run on seeds other than the ones the
// acceptance suite uses.

#include "smpkit/maximum_principle.hpp"
#include "smpkit/studies.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

using namespace smpkit;

namespace {

double round_up(double c) {
    if (c <= 0.0) return 0.0;
    const double scale = std::pow(10.0, std::floor(std::log10(c)) - 1.0);
    return std::ceil(c / scale) * scale;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"calibrate bias constants of the identity pass rule"};
    std::vector<std::string> presets{"lq_scalar", "heat", "cubic_scalar"};
    std::vector<std::uint64_t> seeds{1001, 1002};
    std::size_t tests = 20;
    double safety = 2.0;
    std::vector<std::string> checks{"first_order", "second_order", "gradient", "mp"};
    std::string gradient_control = "zero";
    bool verbose = false;
    app.add_option("--presets", presets);
    app.add_option("--seeds", seeds);
    app.add_option("--tests", tests);
    app.add_option("--safety", safety);
    app.add_option("--checks", checks);
    app.add_option("--gradient-control", gradient_control, "control the gradient check runs around");
    app.add_flag("--verbose", verbose, "print every gradient report");
    CLI11_PARSE(app, argc, argv);

    auto wanted = [&](const std::string& c) { return std::find(checks.begin(), checks.end(), c) != checks.end(); };
    const RegressionBasis basis(2, 4, 1e-8);
    double k_sigma = 3.0;
    std::map<std::string, std::vector<IdentityReport>> pooled;
    auto record = [&](const std::string& check, const std::vector<IdentityReport>& reports) {
        auto& all = pooled[check];
        all.insert(all.end(), reports.begin(), reports.end());
        return required_bias(reports, k_sigma);
    };
    for (const auto& name : presets) {
        const Preset preset = load_preset(name);
        k_sigma = preset.rule("first_order").k_sigma;
        PassRule loose{k_sigma, 0.0};
        std::map<std::string, double> need;
        pooled.clear();
        for (const Level& level : refinement_ladder()) {
            for (const auto seed : seeds) {
                const bool base = wanted("first_order") || wanted("second_order") || (preset.lq && wanted("mp"));
                const PresetRun run = run_preset(preset, base ? level : Level{0.1, 200}, seed, basis);
                std::printf("%s dt=%g paths=%zu seed=%llu", name.c_str(), level.dt, level.paths,
                            static_cast<unsigned long long>(seed));
                if (wanted("first_order")) {
                    const auto s1 = first_identity_study(run, preset, tests, seed, loose);
                    need["first_order"] = std::max(need["first_order"], record("first_order", s1.reports));
                    std::printf("  first |res|=%.3e", s1.mean_abs_residual);
                }
                if (wanted("second_order")) {
                    const auto s2 = second_identity_study(run, preset, basis, tests, seed, loose);
                    need["second_order"] = std::max(need["second_order"], record("second_order", s2.reports));
                    std::printf("  second |res|=%.3e", s2.mean_abs_residual);
                }
                std::printf("\n");
                if (preset.lq && wanted("gradient")) {
                    const PresetRun grun = run_preset(preset, level, seed, basis, gradient_control);
                    const auto g = gradient_study(grun, preset, basis, 5, seed, 0.1, loose);
                    need["gradient"] = std::max(need["gradient"], record("gradient", g.reports));
                    for (const auto& r : g.reports) {
                        if (verbose) {
                            std::printf("    gradient fd=%.6e pairing=%.6e residual=%.3e se=%.3e\n", r.lhs, r.rhs,
                                        r.residual, r.std_error);
                        }
                    }
                }
                if (preset.lq && wanted("mp")) {
                    const SecondOrderData data = second_order_data(preset.scenario, run.trajectory, run.first);
                    const SecondOrderAdjoint sa =
                        solve_second_adjoint(preset.scenario.op, data, run.trajectory, run.ens, basis);
                    const MPReport mp = check_condition(preset.scenario, run.trajectory, run.first, sa,
                                                        preset.scenario.control_set.enumerate(21),
                                                        uniform_time_grid(run.grid.n_steps(), 8), loose);
                    double c = 0.0;
                    for (const auto& e : mp.entries) c = std::max(c, (-e.mean - k_sigma * e.std_error) / level.dt);
                    need["mp"] = std::max(need["mp"], c);
                }
                std::fflush(stdout);
            }
        }
        for (const auto& [check, floor] : need) {
            const double rms = pooled.count(check) ? bias_slope_estimate(pooled[check]) : 0.0;
            const double c = std::max(floor, rms);
            std::printf("%s: c_bias.%s = %g   (pass floor %.4g, rms bias slope %.4g)\n", name.c_str(), check.c_str(),
                        round_up(safety * c), floor, rms);
        }
        std::fflush(stdout);
    }
    return 0;
}
