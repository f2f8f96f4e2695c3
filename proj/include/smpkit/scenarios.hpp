#pragma once

#include "smpkit/brownian.hpp"
#include "smpkit/forward_see.hpp"
#include "smpkit/preset_file.hpp"
#include "smpkit/scenario.hpp"
#include "smpkit/transposition.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace smpkit {

/// dx = (A x + B u) dt + (C x + D u + sigma) dw,
/// J = E[ int 1/2 (x^T M x + u^T N u) dt + 1/2 x(T)^T G x(T) ].
struct LqParams {
    Eigen::MatrixXd A, B, C, D;
    Eigen::VectorXd sigma;
    Eigen::MatrixXd M, N, G;
    double T = 1.0;
    Eigen::VectorXd x0;

    std::size_t n() const noexcept { return static_cast<std::size_t>(A.rows()); }
    std::size_t m() const noexcept { return static_cast<std::size_t>(B.cols()); }
    /// Throws DomainError on inconsistent shapes or N not positive definite.
    void validate() const;
};

/// Scenario for an LQ problem; the generator is the zero operator and A
/// enters through the drift. All derivatives are analytic.
Scenario make_lq_scenario(const LqParams& lq, ControlSet control_set, std::string name = "lq");

/// dx = u dt + 0.3 dw, g = 1/2 (x^2 + u^2), h = 1/2 x^2, T = 1, x0 = 1, U = [-5, 5].
std::pair<Scenario, LqParams> make_lq_scalar(double sigma = 0.3, double control_bound = 5.0);

/// Oracle output. Riccati oracles fill P, q, r and the feedback
///     u_j = -(gain_j x + offset_j);
/// dynamic-programming oracles fill the lattice tables.
struct OracleBundle {
    TimeGrid grid{0.0, 1.0, 1};
    std::vector<Eigen::MatrixXd> P;
    std::vector<Eigen::VectorXd> q;
    std::vector<double> r;
    std::vector<Eigen::MatrixXd> gain;
    std::vector<Eigen::VectorXd> offset;

    std::vector<double> lattice;
    std::vector<std::vector<double>> value_table;   // (n_steps + 1) x lattice
    std::vector<std::vector<double>> policy_table;  // n_steps x lattice
    double escape_probability = 0.0;

    bool is_riccati() const noexcept { return !P.empty(); }
    /// Value at time t0 of the grid.
    double value_at(const Eigen::VectorXd& x0) const;
    /// Optimal (Riccati) or greedy (lattice) control at a grid step.
    Eigen::VectorXd control_at(std::size_t step, const Eigen::VectorXd& x) const;
    ControlProcess feedback() const;
};

/// Backward RK4 on the Riccati system with R = N + D^T P D, L = B^T P + D^T P C,
/// l = B^T q + D^T P sigma:
///     -P' = M + A^T P + P A + C^T P C - L^T R^{-1} L,
///     -q' = A^T q + C^T P sigma - L^T R^{-1} l,
///     -r' = 1/2 sigma^T P sigma - 1/2 l^T R^{-1} l,
/// P(T) = G, q(T) = 0, r(T) = 0. Throws OracleBreakdownError when R loses
/// positive definiteness.
OracleBundle riccati_oracle(const LqParams& lq, const TimeGrid& grid, std::size_t substeps = 8);

struct HeatParams {
    double beta = 0.1;
    double diffusion_control = 0.2;  // D = diffusion_control * B
    double length = 1.0;
    double control_bound = 5.0;
};

/// Dirichlet heat equation on n_modes with a = B u, b = beta x + D u,
/// g = 1/2 (|x|^2 + |u|^2), h = 1/2 |x|^2. B targets the first control_dim
/// modes. lipschitz = max(|B|, beta, |D|).
Scenario make_heat_scenario(std::size_t n_modes, std::size_t control_dim, const HeatParams& params = {});

struct CubicParams {
    double kappa = 0.5;
    double sigma = 0.3;
    double gamma = 0.5;
    double control_bound = 5.0;
};

/// Scalar problem with path-dependent second-order data:
///     dx = u dt + (kappa x + sigma) dw,
///     g = 1/2 (x^2 + u^2) + gamma/6 x^3,  h = 1/2 x^2 + gamma/6 x^3,
/// so that -h_xx = -1 - gamma x and g_xx = 1 + gamma x.
Scenario make_cubic_scalar(const CubicParams& params = {});

/// Uniform lattice of n_points on [lo, hi].
std::vector<double> uniform_lattice(double lo, double hi, std::size_t n_points);

/// Backward dynamic programming on a scalar state lattice:
///     V_N = h,  V_j(x) = min_u [ g dt + sum_i w_i V_{j+1}(S(dt)(x + a dt + b sqrt(dt) z_i)) ]
/// with 7-point Gauss-Hermite nodes z_i and Catmull-Rom interpolation.
/// The greedy policy is propagated forward from x0 as a lattice mass; when
/// more than 1% leaves the lattice LatticeTooSmallError is thrown.
OracleBundle dp_oracle_scalar(const Scenario& scenario, const std::vector<double>& x_lattice,
                              const std::vector<double>& u_grid, const TimeGrid& grid, double x0);

/// Probabilists' Gauss-Hermite rule: nodes and weights (summing to 1) for
/// E[f(Z)], Z ~ N(0, 1).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(std::size_t n_points);

/// A preset problem instance loaded from a preset file.
struct Preset {
    std::string name;
    std::string kind;  // "lq", "heat" or "cubic"
    PresetFile file;
    Scenario scenario;
    SpectralVector x0;
    double T = 1.0;
    std::optional<LqParams> lq;
    std::string default_control;  // "riccati", "zero" or "constant"
    Eigen::VectorXd control_value;

    /// k_sigma = `k_sigma` (default 3), c_bias = `c_bias.<check>` (default 0).
    PassRule rule(const std::string& check) const;
};

/// $SMPKIT_PRESET_DIR when set, otherwise the directory configured at build time.
std::filesystem::path preset_directory();

/// Loads `<preset_directory>/<name>.preset`, or name itself when it is a path
/// to an existing file. n_modes overrides the preset's mode count for heat
/// presets. Throws PresetError for unknown presets or malformed files.
Preset load_preset(const std::string& name, std::optional<std::size_t> n_modes = std::nullopt);

}  // namespace smpkit
