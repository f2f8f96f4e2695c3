#pragma once

#include "smpkit/maximum_principle.hpp"
#include "smpkit/scenarios.hpp"
#include "smpkit/transposition.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace smpkit {

/// One rung of a refinement ladder.
struct Level {
    double dt = 0.005;
    std::size_t paths = 10000;
};

/// {(1/100, 2500), (1/200, 10^4), (1/400, 4 10^4)}: dt halves, paths quadruple.
std::vector<Level> refinement_ladder();

/// Control named by kind on the preset's grid: "riccati" (LQ feedback),
/// "perturbed" (Riccati + 0.5 on [0, T/4)), "zero", "constant" (preset
/// control_value), or "" for the preset default.
ControlProcess preset_control(const Preset& preset, const TimeGrid& grid, const std::string& kind = "");

/// Forward trajectory and first adjoint of a preset on a fresh ensemble.
struct PresetRun {
    TimeGrid grid;
    BrownianEnsemble ens;
    StateEnsemble trajectory;
    AdjointPair first;
};

PresetRun run_preset(const Preset& preset, const Level& level, std::uint64_t seed, const RegressionBasis& basis,
                     const std::string& control = "");

struct IdentityStudy {
    Level level;
    std::vector<IdentityReport> reports;
    double mean_abs_residual = 0.0;
    bool all_pass = true;
};

IdentityStudy summarize(const Level& level, std::vector<IdentityReport> reports);

/// n_tests randomized first-order identity checks; test data seeded by test_seed.
IdentityStudy first_identity_study(const PresetRun& run, const Preset& preset, std::size_t n_tests,
                                   std::uint64_t test_seed, const PassRule& rule);

/// n_tests randomized second-order identity checks.
IdentityStudy second_identity_study(const PresetRun& run, const Preset& preset, const RegressionBasis& basis,
                                    std::size_t n_tests, std::uint64_t test_seed, const PassRule& rule);

/// Gradient consistency along n_dirs adapted directions
///     du(t) = c1 sin(omega t) + c2 xbar(t)
/// around the per-path open-loop control realized by the run.
IdentityStudy gradient_study(const PresetRun& run, const Preset& preset, const RegressionBasis& basis,
                             std::size_t n_dirs, std::uint64_t dir_seed, double h, const PassRule& rule);

/// Smallest c with |residual| <= k_sigma stderr + c dt for every report.
double required_bias(const std::vector<IdentityReport>& reports, double k_sigma);

/// Second-moment estimate of the RMS bias slope:
///     sqrt(max(0, mean over reports of (residual^2 - stderr^2) / dt^2)),
/// since E residual^2 = bias^2 + stderr^2.
double bias_slope_estimate(const std::vector<IdentityReport>& reports);

}  // namespace smpkit
