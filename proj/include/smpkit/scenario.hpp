#pragma once

#include "smpkit/path_field.hpp"
#include "smpkit/spectral_space.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace smpkit {

/// Admissible control values U.
class ControlSet {
public:
    struct Box {
        Eigen::VectorXd lo;
        Eigen::VectorXd hi;
    };
    struct FiniteGrid {
        std::vector<Eigen::VectorXd> points;
    };

    static ControlSet box(Eigen::VectorXd lo, Eigen::VectorXd hi);
    static ControlSet finite_grid(std::vector<Eigen::VectorXd> points);

    std::size_t dim() const noexcept;
    bool is_convex() const noexcept { return std::holds_alternative<Box>(set_); }
    const Box* as_box() const noexcept { return std::get_if<Box>(&set_); }
    const FiniteGrid* as_grid() const noexcept { return std::get_if<FiniteGrid>(&set_); }

    /// Box: coordinatewise clamp. FiniteGrid: nearest point, lowest index on ties.
    Eigen::VectorXd project(const Eigen::VectorXd& u) const;
    bool contains(const Eigen::VectorXd& u, double tol = 1e-12) const;

    /// Check points: a tensor grid with points_per_dim values per coordinate
    /// for a Box, every point for a FiniteGrid.
    std::vector<Eigen::VectorXd> enumerate(std::size_t points_per_dim) const;

private:
    explicit ControlSet(std::variant<Box, FiniteGrid> set) : set_(std::move(set)) {}
    std::variant<Box, FiniteGrid> set_;
};

using VectorField =
    std::function<Eigen::VectorXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;
using MatrixField =
    std::function<Eigen::MatrixXd(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;
using ScalarField = std::function<double(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u)>;
using TerminalField = std::function<double(const Eigen::VectorXd& x)>;
using TerminalGradient = std::function<Eigen::VectorXd(const Eigen::VectorXd& x)>;
using TerminalHessian = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;
/// sum_i w_i d^2 f_i / dx^2 for a vector field f.
using ContractedHessian = std::function<Eigen::MatrixXd(
    double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u, const Eigen::VectorXd& w)>;

/// Optional analytic derivatives. Missing entries fall back to central
/// finite differences with step 1e-5 (1 + |x_i|).
struct ScenarioDerivatives {
    std::optional<MatrixField> drift_x, drift_u, diffusion_x, diffusion_u;
    std::optional<VectorField> cost_x, cost_u;
    std::optional<MatrixField> cost_xx;
    std::optional<TerminalGradient> terminal_x;
    std::optional<TerminalHessian> terminal_xx;
    std::optional<ContractedHessian> drift_xx, diffusion_xx;
};

/// One instance of the control problem
///     dx = [A x + a(t,x,u)] dt + b(t,x,u) dw,
///     J(u) = E[ int g(t,x,u) dt + h(x(T)) ].
struct Scenario {
    std::string name;
    OperatorSpec op;
    std::size_t control_dim = 1;
    ControlSet control_set;
    double lipschitz = 1.0;

    VectorField drift;
    VectorField diffusion;
    ScalarField running_cost;
    TerminalField terminal_cost;
    ScenarioDerivatives derivatives;

    /// Asserts that a_x, b_x, g_xx and h_xx do not depend on (x, u) and that
    /// a_xx = b_xx = 0, so second-order adjoint data is deterministic.
    bool second_order_data_deterministic = false;

    std::size_t n() const noexcept { return op.n_modes(); }

    Eigen::MatrixXd drift_x(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::MatrixXd drift_u(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::MatrixXd diffusion_x(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::MatrixXd diffusion_u(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::VectorXd cost_x(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::VectorXd cost_u(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::MatrixXd cost_xx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
    Eigen::VectorXd terminal_x(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd terminal_xx(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd drift_xx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                             const Eigen::VectorXd& w) const;
    Eigen::MatrixXd diffusion_xx(double t, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const Eigen::VectorXd& w) const;
};

/// Largest observed |f(x1) - f(x2)| / |x1 - x2| over random triples for the
/// drift and the diffusion, a statistical witness for the Lipschitz bound.
double lipschitz_spot_check(const Scenario& scenario, std::size_t n_samples, std::uint64_t seed,
                            double radius = 2.0);

/// An adapted control u(t). Open-loop values are either shared by all paths
/// or stored per path; feedback laws see the current state only.
class ControlProcess {
public:
    using FeedbackLaw =
        std::function<Eigen::VectorXd(std::size_t step, double t, const Eigen::VectorXd& x)>;

    /// values: n_steps x control_dim.
    static ControlProcess open_loop(Eigen::MatrixXd values);
    /// values: n_paths x n_steps x control_dim.
    static ControlProcess open_loop_per_path(PathField values);
    static ControlProcess constant(const Eigen::VectorXd& u, std::size_t n_steps);
    static ControlProcess feedback(FeedbackLaw law, std::size_t control_dim);

    bool is_feedback() const noexcept { return static_cast<bool>(law_); }
    bool is_per_path() const noexcept { return !per_path_.empty(); }
    std::size_t control_dim() const noexcept { return control_dim_; }
    const PathField& per_path_values() const noexcept { return per_path_; }
    const Eigen::MatrixXd& shared_values() const noexcept { return shared_; }

    /// Unprojected control value for (path, step) at state x.
    Eigen::VectorXd value(std::size_t path, std::size_t step, double t,
                          const Eigen::VectorXd& x) const;

private:
    std::size_t control_dim_ = 0;
    Eigen::MatrixXd shared_;
    PathField per_path_;
    FeedbackLaw law_;
};

}  // namespace smpkit
