#pragma once

#include "smpkit/adjoint_bsde.hpp"
#include "smpkit/brownian.hpp"
#include "smpkit/forward_see.hpp"
#include "smpkit/lsmc.hpp"
#include "smpkit/path_field.hpp"
#include "smpkit/scenario.hpp"
#include "smpkit/spectral_space.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace smpkit {

/// Coefficients of the matrix backward equation
///     dP = [-(A + J)^T P - P (A + J) - K^T P K - (K^T Q + Q K) + F] dt + Q dw,
///     P(T) = P_T.
/// J, K, F are indexed by step; terminal holds one time slice.
struct SecondOrderData {
    MatrixProcess J;
    MatrixProcess K;
    MatrixProcess F;
    MatrixProcess terminal;

    bool is_deterministic() const noexcept {
        return J.is_deterministic() && K.is_deterministic() && F.is_deterministic() &&
               terminal.is_deterministic();
    }
};

struct SecondOrderAdjoint {
    TimeGrid grid;
    EnsembleId id;
    MatrixProcess P;  // n_steps + 1 slices
    MatrixProcess Q;  // n_steps slices
    double max_asymmetry = 0.0;
    std::vector<std::string> warnings;
};

/// Per-entry factors exp((mu_k + mu_l) dt), column-major.
Eigen::VectorXd tensor_factors(const OperatorSpec& op, double dt);

/// T(dt) M = S(dt) M S*(dt); entry (k, l) scaled by exp((mu_k + mu_l) dt).
Eigen::MatrixXd tensor_semigroup_apply(const OperatorSpec& op, double dt, const Eigen::MatrixXd& M);

/// Solves the matrix equation by vectorizing P column-major into R^{n^2} and
/// running the backward sweep of solve_bsde with the tensor semigroup for the
/// A-part. Deterministic data takes a single-path fast path with Q = 0.
///
/// conditioning supplies the regression features and must come from ens.
/// With symmetric terminal and F data an asymmetry above 1e-6 is recorded
/// in warnings.
SecondOrderAdjoint solve_second_adjoint(
    const OperatorSpec& op, const SecondOrderData& data, const StateEnsemble& conditioning,
    const BrownianEnsemble& ens, const RegressionBasis& basis,
    BackwardSplitting splitting = BackwardSplitting::kPropagateThenDrive);

/// Deterministic reference: RK4 on
///     P' = -(A + J)^T P - P (A + J) - K^T P K + F,  P(T) = P_T,
/// with A = diag(mu). Each grid step is split into substeps so that
/// max |mu_k + mu_l| h <= 0.05. J, K, F are linearly interpolated between
/// grid values. Returns P at every grid point.
std::vector<Eigen::MatrixXd> lyapunov_oracle(const OperatorSpec& op, const MatrixProcess& J,
                                             const MatrixProcess& K, const MatrixProcess& F,
                                             const Eigen::MatrixXd& terminal, const TimeGrid& grid);

/// Second-order data along an optimal-pair candidate:
///     P_T = -h_xx(xbar(T)), J = a_x, K = b_x, F = -H_xx(t, xbar, ubar, y, Y).
SecondOrderData second_order_data(const Scenario& scenario, const StateEnsemble& trajectory,
                                  const AdjointPair& first);

}  // namespace smpkit
