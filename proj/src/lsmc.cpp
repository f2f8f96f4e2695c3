#include "smpkit/lsmc.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace smpkit {

RegressionFit lsmc_regress(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets,
                           double ridge) {
    if (features.rows() != targets.rows()) {
        throw DomainError("lsmc_regress: features and targets have different row counts");
    }
    if (!(ridge >= 0.0)) {
        throw DomainError("lsmc_regress: ridge must be non-negative");
    }
    if (features.cols() == 0) {
        throw DegenerateBasisError("lsmc_regress: empty feature set");
    }
    auto ne = kernels::normal_equations(features, targets);
    ne.gram.diagonal().array() += ridge;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(ne.gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        throw DegenerateBasisError("lsmc_regress: normal matrix is not positive definite");
    }
    const double pivot_ratio = ldlt.vectorD().minCoeff() / ldlt.vectorD().maxCoeff();
    if (ridge == 0.0 && (!(ldlt.rcond() >= 1e-13) || !(pivot_ratio > 1e-13))) {
        throw DegenerateBasisError("lsmc_regress: singular normal matrix (rcond " +
                                   std::to_string(ldlt.rcond()) + ")");
    }
    RegressionFit fit;
    fit.coefficients = ldlt.solve(ne.cross);
    fit.fitted = features * fit.coefficients;
    return fit;
}

RegressionBasis::RegressionBasis(int degree, std::size_t mode_cap, double ridge)
    : degree_(degree), mode_cap_(mode_cap), ridge_(ridge) {
    if (degree < 0 || degree > 2) {
        throw DomainError("RegressionBasis: degree must be 0, 1 or 2");
    }
    if (!(ridge >= 0.0)) {
        throw DomainError("RegressionBasis: ridge must be non-negative");
    }
}

std::size_t RegressionBasis::size(std::size_t n_modes) const noexcept {
    const std::size_t m = std::min(n_modes, mode_cap_);
    std::size_t s = 1;
    if (degree_ >= 1) s += m;
    if (degree_ >= 2) s += m * (m + 1) / 2;
    return s;
}

void RegressionBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& x,
                               Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> out) const {
    const auto m = static_cast<Eigen::Index>(std::min(static_cast<std::size_t>(x.size()), mode_cap_));
    Eigen::Index c = 0;
    out[c++] = 1.0;
    if (degree_ >= 1) {
        for (Eigen::Index k = 0; k < m; ++k) out[c++] = x[k];
    }
    if (degree_ >= 2) {
        for (Eigen::Index k = 0; k < m; ++k) {
            for (Eigen::Index l = k; l < m; ++l) out[c++] = x[k] * x[l];
        }
    }
}

Eigen::MatrixXd RegressionBasis::design(const PathField& states, std::size_t step) const {
    const auto rows = static_cast<Eigen::Index>(states.n_paths());
    const auto cols = static_cast<Eigen::Index>(size(states.dim()));
    Eigen::MatrixXd d(rows, cols);
    kernels::for_each_path(states.n_paths(), [&](std::size_t p) {
        evaluate(states.at(p, step), d.row(static_cast<Eigen::Index>(p)));
    });
    return d;
}

void RegressionBasis::check_overfit(std::size_t n_modes, std::size_t n_paths) const {
    if (size(n_modes) * 10 > n_paths) {
        throw DomainError("RegressionBasis: " + std::to_string(size(n_modes)) +
                          " features exceed n_paths / 10 for " + std::to_string(n_paths) + " paths");
    }
}

Eigen::MatrixXd conditional_expectation(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                                        double relative_ridge) {
    const Eigen::Index rows = design.rows();
    if (rows == 0) {
        throw DomainError("conditional_expectation: no rows");
    }
    std::vector<Eigen::Index> keep;
    std::vector<double> centers;
    std::vector<double> scales;
    for (Eigen::Index c = 1; c < design.cols(); ++c) {
        const double mean = design.col(c).mean();
        const double var = (design.col(c).array() - mean).square().mean();
        const double sd = std::sqrt(var);
        if (sd > 1e-10 * std::max(1.0, std::abs(mean))) {
            keep.push_back(c);
            centers.push_back(mean);
            scales.push_back(sd);
        }
    }
    // Centered regression: the ridge acts on the slopes only, never on the mean.
    const Eigen::RowVectorXd mean = targets.colwise().mean();
    Eigen::MatrixXd fitted = mean.replicate(rows, 1);
    if (keep.empty()) return fitted;
    Eigen::MatrixXd standardized(rows, static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        standardized.col(static_cast<Eigen::Index>(i)) = (design.col(keep[i]).array() - centers[i]) / scales[i];
    }
    const Eigen::MatrixXd centered = targets.rowwise() - mean;
    fitted += lsmc_regress(standardized, centered, relative_ridge * static_cast<double>(rows)).fitted;
    return fitted;
}

}  // namespace smpkit
