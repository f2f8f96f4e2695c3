#pragma once

#include "smpkit/path_field.hpp"

#include <Eigen/Dense>

#include <cstddef>

namespace smpkit {

struct RegressionFit {
    Eigen::MatrixXd coefficients;  // features x targets
    Eigen::MatrixXd fitted;        // rows x targets
};

/// Ridge least squares: minimizes |targets - features beta|^2 + ridge |beta|^2.
///
/// Throws DomainError on a row mismatch or negative ridge, and
/// DegenerateBasisError when the normal matrix is singular (ridge = 0) or
/// not positive definite.
RegressionFit lsmc_regress(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                           double ridge);

/// Polynomial features on the leading modes of a state vector:
/// 1, x_k and (degree 2) x_k x_l for k <= l, over the first min(n, mode_cap) modes.
class RegressionBasis {
public:
    RegressionBasis(int degree = 2, std::size_t mode_cap = 4, double ridge = 1e-8);

    int degree() const noexcept { return degree_; }
    std::size_t mode_cap() const noexcept { return mode_cap_; }
    /// Ridge per row of the standardized design (see conditional_expectation).
    double ridge() const noexcept { return ridge_; }

    std::size_t size(std::size_t n_modes) const noexcept;
    void evaluate(const Eigen::Ref<const Eigen::VectorXd>& x, Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const;
    /// n_paths x size design matrix of the states at one time index.
    Eigen::MatrixXd design(const PathField& states, std::size_t step) const;

    /// Throws DomainError when size(n_modes) > n_paths / 10.
    void check_overfit(std::size_t n_modes, std::size_t n_paths) const;

private:
    int degree_;
    std::size_t mode_cap_;
    double ridge_;
};

/// Sample-space conditional expectation: least-squares projection of each
/// target column onto the span of the design columns.
///
/// The first design column must be the intercept. Other columns are centered
/// and scaled to unit variance, columns with no variation are dropped, and
/// lsmc_regress runs on the centered targets with ridge = relative_ridge * rows,
/// so the sample mean is reproduced exactly.
Eigen::MatrixXd conditional_expectation(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                                        double relative_ridge);

}  // namespace smpkit
