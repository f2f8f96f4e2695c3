#pragma once

#include "smpkit/brownian.hpp"
#include "smpkit/forward_see.hpp"
#include "smpkit/lsmc.hpp"
#include "smpkit/path_field.hpp"
#include "smpkit/scenario.hpp"
#include "smpkit/spectral_space.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace smpkit {

/// Driver f(t_j, y, Y) of a backward equation dy = -A* y dt + f dt + Y dw,
/// evaluated on one path at one step. Writes f into out.
using BsdeDriver = std::function<void(std::size_t path, std::size_t step, const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& Y, Eigen::Ref<Eigen::VectorXd> out)>;

/// Where the semigroup factor is applied in one backward step.
enum class BackwardSplitting {
    /// y_j = E_j[S y_{j+1}] - f(E_j[S y_{j+1}], Y_j) dt, Y_j = E_j[S y_{j+1} dw_j] / dt.
    kPropagateThenDrive,
    /// y_j = S (E_j[y_{j+1}] - f(E_j[y_{j+1}], Y_j) dt), Y_j = E_j[y_{j+1} dw_j] / dt.
    kDriveThenPropagate,
};

struct BsdeSolution {
    PathField y;  // n_paths x (n_steps + 1) x dim
    PathField Y;  // n_paths x n_steps x dim
};

/// Explicit backward Euler with least-squares Monte Carlo conditional
/// expectations. Regression features are evaluated on conditioning states
/// (the forward trajectory) at each step.
///
/// factors holds the per-coordinate semigroup multipliers for one step.
/// terminal is n_paths x 1 x dim.
BsdeSolution solve_bsde(const Eigen::VectorXd& factors, const PathField& terminal,
                        const BsdeDriver& driver, const PathField& conditioning,
                        const BrownianEnsemble& ens, const RegressionBasis& basis,
                        BackwardSplitting splitting = BackwardSplitting::kPropagateThenDrive);

/// First-order adjoint (y, Y) along a reference trajectory.
struct AdjointPair {
    TimeGrid grid;
    EnsembleId id;
    PathField y;  // n_paths x (n_steps + 1) x n
    PathField Y;  // n_paths x n_steps x n
};

/// f(t, y, Y) = -a_x^T y - b_x^T Y + g_x along (xbar, ubar) of the trajectory.
BsdeDriver first_adjoint_driver(const Scenario& scenario, const StateEnsemble& trajectory);

/// Solves dy = -A* y dt + f(t, y, Y) dt + Y dw, y(T) = -h_x(xbar(T)) with the
/// driver of first_adjoint_driver. trajectory must come from ens.
AdjointPair solve_first_adjoint(const Scenario& scenario, const StateEnsemble& trajectory,
                                const BrownianEnsemble& ens, const RegressionBasis& basis);

/// Closed form for deterministic data:
///     y(t_j) = S*(T - t_j) yT - sum_{i >= j} S*(t_i - t_j) f(t_i) dt.
/// f_path holds f at t_0..t_{n_steps-1}; returns y at t_0..t_{n_steps}.
std::vector<SpectralVector> deterministic_first_adjoint(const OperatorSpec& op,
                                                        const SpectralVector& yT,
                                                        const std::vector<SpectralVector>& f_path,
                                                        const TimeGrid& grid);

}  // namespace smpkit
