#pragma once

#include "smpkit/brownian.hpp"
#include "smpkit/path_field.hpp"
#include "smpkit/scenario.hpp"
#include "smpkit/spectral_space.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <vector>

namespace smpkit {

/// Coefficient magnitude above which a forward sweep is declared divergent.
inline constexpr double kDivergenceGuard = 1e12;

/// Initial datum, shared by every path or given per path.
class InitialState {
public:
    InitialState(SpectralVector shared) : values_{std::move(shared)} {}  // NOLINT(implicit)
    explicit InitialState(std::vector<SpectralVector> per_path) : values_(std::move(per_path)) {}

    const SpectralVector& at(std::size_t path) const {
        return values_.size() == 1 ? values_.front() : values_.at(path);
    }
    bool is_shared() const noexcept { return values_.size() == 1; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    std::vector<SpectralVector> values_;
};

/// Adapted H-valued test process. Writes the value at (path, step) into out;
/// it may read Brownian data up to that step only. An empty function is zero.
using VectorProcess =
    std::function<void(std::size_t path, std::size_t step, Eigen::Ref<Eigen::VectorXd> out)>;

struct StateEnsemble {
    TimeGrid grid;
    EnsembleId id;
    PathField states;         // n_paths x (n_steps + 1) x n
    PathField controls_used;  // n_paths x n_steps x control_dim; empty for test equations
};

/// Exponential Euler-Maruyama for dx = [Ax + a] dt + b dw:
///     x_{j+1} = S(dt) (x_j + a(t_j, x_j, u_j) dt + b(t_j, x_j, u_j) dw_j).
/// Control values are projected onto the control set before use.
StateEnsemble simulate_controlled(const Scenario& scenario, const InitialState& x0,
                                  const ControlProcess& control, const BrownianEnsemble& ens);

/// dz = (A z + v1) dt + v2 dw on (t_{t0_index}, T], z(t_{t0_index}) = eta.
/// States before t0_index are zero.
StateEnsemble simulate_linear_test(const OperatorSpec& op, std::size_t t0_index,
                                   const InitialState& eta, const VectorProcess& v1,
                                   const VectorProcess& v2, const BrownianEnsemble& ens);

/// dx = ((A + J) x + u) dt + (K x + v) dw from x(t_{t0_index}) = xi, with S(dt)
/// applied after the affine update. Pass a Yosida generator as op for the
/// Yosida-approximated variant.
StateEnsemble simulate_linearized(const OperatorSpec& op, const MatrixProcess& J,
                                  const MatrixProcess& K, std::size_t t0_index,
                                  const InitialState& xi, const VectorProcess& u,
                                  const VectorProcess& v, const BrownianEnsemble& ens);

/// Streams one path of the linearized equation without storing it.
///
/// Calls visit(step, x) for step = t0_index..n_steps. J or K may be null
/// (treated as zero). Shared by the simulators and the identity verifiers.
class LinearizedStepper {
public:
    /// Scratch space for one path; reuse it across steps to avoid allocation.
    struct Buffers {
        explicit Buffers(std::size_t n)
            : u(static_cast<Eigen::Index>(n)), v(static_cast<Eigen::Index>(n)), next(static_cast<Eigen::Index>(n)) {}
        Eigen::VectorXd u, v, next;
    };

    LinearizedStepper(const OperatorSpec& op, const MatrixProcess* J, const MatrixProcess* K,
                      VectorProcess u, VectorProcess v, const BrownianEnsemble& ens);

    template <typename Visit>
    void run(std::size_t path, std::size_t t0_index, const SpectralVector& xi, Visit&& visit) const {
        Eigen::VectorXd x = xi;
        Buffers b(static_cast<std::size_t>(x.size()));
        visit(t0_index, static_cast<const Eigen::VectorXd&>(x));
        for (std::size_t j = t0_index; j < ens_->n_steps(); ++j) {
            advance(path, j, x, b);
            visit(j + 1, static_cast<const Eigen::VectorXd&>(x));
        }
    }

    /// Evaluates the forcing processes into b.u, b.v and advances x by one step.
    void advance(std::size_t path, std::size_t step, Eigen::VectorXd& x, Buffers& b) const;

    /// One step with given forcing values u, v (already evaluated at (path, step)).
    void advance_with(std::size_t path, std::size_t step, Eigen::VectorXd& x, const Eigen::VectorXd& u,
                      const Eigen::VectorXd& v, Eigen::VectorXd& next) const;

private:
    const MatrixProcess* J_;
    const MatrixProcess* K_;
    VectorProcess u_;
    VectorProcess v_;
    const BrownianEnsemble* ens_;
    Eigen::VectorXd factors_;
    double dt_;
};

struct CostEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Per-path left-endpoint quadrature of int g dt plus h(x(T)).
std::vector<double> path_costs(const Scenario& scenario, const StateEnsemble& trajectory);

/// Sample mean and standard error of path_costs over a fresh simulation.
CostEstimate estimate_cost(const Scenario& scenario, const InitialState& x0,
                           const ControlProcess& control, const BrownianEnsemble& ens);
CostEstimate estimate_cost(const Scenario& scenario, const StateEnsemble& trajectory);

/// Per-path open-loop realization of the controls a trajectory actually used.
ControlProcess realized_control(const StateEnsemble& trajectory);

/// Throws SimulationDivergedError on a non-finite or guard-exceeding entry.
void check_finite(const Eigen::VectorXd& x, std::size_t step, std::size_t path);

}  // namespace smpkit
