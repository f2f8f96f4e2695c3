#pragma once

#include "smpkit/adjoint_bsde.hpp"
#include "smpkit/brownian.hpp"
#include "smpkit/forward_see.hpp"
#include "smpkit/lsmc.hpp"
#include "smpkit/scenario.hpp"
#include "smpkit/second_adjoint.hpp"
#include "smpkit/transposition.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace smpkit {

/// H(t, x, u, k1, k2) = <k1, a(t, x, u)> + <k2, b(t, x, u)> - g(t, x, u).
/// Throws DomainError when u is outside the control set.
double hamiltonian(const Scenario& scenario, double t, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& u, const Eigen::VectorXd& k1, const Eigen::VectorXd& k2);

/// a_u^T y + b_u^T Y - g_u along the trajectory at one step, n_paths x control_dim.
/// Throws WrongTheoremError for a non-convex control set.
Eigen::MatrixXd convex_gradient(const Scenario& scenario, std::size_t t_index,
                                const StateEnsemble& trajectory, const AdjointPair& first);

/// The same gradient at every step, n_paths x n_steps x control_dim. The
/// convexity check is left to the caller.
PathField gradient_field(const Scenario& scenario, const StateEnsemble& trajectory,
                         const AdjointPair& first);

/// Per-path S(t_j, u) = H(xbar, ubar, y, Y) - H(xbar, u, y, Y) - 1/2 <P db, db>,
/// db = b(xbar, ubar) - b(xbar, u).
std::vector<double> spike_functional(const Scenario& scenario, std::size_t t_index,
                                     const Eigen::VectorXd& u, const StateEnsemble& trajectory,
                                     const AdjointPair& first, const SecondOrderAdjoint& second);

struct MPEntry {
    std::size_t t_index = 0;
    double t = 0.0;
    Eigen::VectorXd u;
    double mean = 0.0;  // sample mean of the entry; >= 0 at an optimum
    double std_error = 0.0;
    double tolerance = 0.0;  // k_sigma * stderr + c_bias * dt
};

struct MPReport {
    std::string condition;  // "spike" or "convex"
    std::vector<MPEntry> entries;
    /// max over entries of max(0, -mean).
    double max_violation = 0.0;
    /// Entry with the largest -mean - tolerance.
    std::size_t worst = 0;
    bool pass = true;
};

/// Sample-mean spike condition S(t, u) >= 0 on the given (t, u) grids.
/// Throws DomainError on an empty grid.
MPReport check_condition(const Scenario& scenario, const StateEnsemble& trajectory,
                         const AdjointPair& first, const SecondOrderAdjoint& second,
                         const std::vector<Eigen::VectorXd>& u_grid,
                         const std::vector<std::size_t>& t_grid, const PassRule& rule = {});

/// Sample-mean convex condition E<a_u^T y + b_u^T Y - g_u, u - ubar> <= 0,
/// reported as entries -E<...> so the sign convention matches check_condition.
MPReport check_convex_condition(const Scenario& scenario, const StateEnsemble& trajectory,
                                const AdjointPair& first, const std::vector<Eigen::VectorXd>& u_grid,
                                const std::vector<std::size_t>& t_grid, const PassRule& rule = {});

/// Evenly spaced t-grid {k N / count : k = 0..count-1}.
std::vector<std::size_t> uniform_time_grid(std::size_t n_steps, std::size_t count);

struct StepRule {
    double step = 0.5;
    /// Stop when |J_k - J_{k-1}| < stagnation * stderr(J_k).
    double stagnation = 0.1;
};

struct OptimizerIterate {
    std::size_t iter = 0;
    double J = 0.0;
    double std_error = 0.0;
    double step_norm = 0.0;
};

struct OptimizerResult {
    PathField control;  // n_paths x n_steps x control_dim
    std::vector<OptimizerIterate> history;
    std::string stop_reason;  // "max_iters", "step_norm" or "stagnation"
};

/// Projected gradient ascent on the convex-condition pairing over per-path
/// open-loop controls: u <- clamp(u + step * (a_u^T y + b_u^T Y - g_u)).
/// history[0] is the initial control. Throws StepRuleError when J rises by
/// more than 10 stderr on 5 consecutive iterations.
OptimizerResult projected_gradient(const Scenario& scenario, const InitialState& x0,
                                   const ControlProcess& init, const StepRule& rule,
                                   std::size_t max_iters, const BrownianEnsemble& ens,
                                   const RegressionBasis& basis);

/// Directional derivative check: the Monte Carlo pairing -E int <grad, du> dt
/// against the central difference (J(u + h du) - J(u - h du)) / 2h, both per
/// path on the same ensemble.
IdentityReport gradient_consistency(const Scenario& scenario, const InitialState& x0,
                                    const PathField& control, const PathField& direction, double h,
                                    const BrownianEnsemble& ens, const RegressionBasis& basis,
                                    const PassRule& rule = {});

struct SpikeRow {
    double epsilon = 0.0;
    double tau = 0.0;
    double J_perturbed = 0.0;
    double J_base = 0.0;
    double delta_J = 0.0;
    double delta_J_std_error = 0.0;
    double predicted = 0.0;  // E int_{E_eps} S dt
    double remainder = 0.0;  // delta_J - predicted
    double remainder_std_error = 0.0;
    double remainder_over_epsilon = 0.0;
};

struct SpikeTable {
    std::vector<SpikeRow> rows;
    /// Number of rows whose |remainder| / eps exceeds that of the previous row.
    std::size_t inversions = 0;
};

/// Spike variation u_eps = u_alt on E_eps = [tau, tau + eps), ubar elsewhere,
/// with E_eps aligned to grid steps. ubar is per-path open loop; base and
/// perturbed runs share ens. Throws DomainError unless eps_list is positive
/// and strictly decreasing with tau + eps_list[0] <= T.
SpikeTable spike_experiment(const Scenario& scenario, const InitialState& x0,
                            const ControlProcess& ubar, const Eigen::VectorXd& u_alt, double tau,
                            const std::vector<double>& eps_list, const BrownianEnsemble& ens,
                            const RegressionBasis& basis);

}  // namespace smpkit
