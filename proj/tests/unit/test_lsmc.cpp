#include "smpkit/error.hpp"
#include "smpkit/lsmc.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace smpkit;
using Catch::Matchers::WithinAbs;

namespace {

Eigen::MatrixXd random_features(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(rows, cols);
    x.col(0).setOnes();
    for (Eigen::Index c = 1; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) x(r, c) = normal(gen);
    }
    return x;
}

}  // namespace

TEST_CASE("targets in the feature span are interpolated exactly") {
    std::mt19937_64 gen(1);
    const Eigen::MatrixXd x = random_features(200, 4, gen);
    Eigen::MatrixXd beta(4, 2);
    beta << 1, -2, 0.5, 3, -1, 0, 2, 1;
    const Eigen::MatrixXd y = x * beta;
    const auto fit = lsmc_regress(x, y, 0.0);
    CHECK((fit.fitted - y).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((fit.coefficients - beta).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("constant feature gives the column mean") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 1);
    Eigen::MatrixXd y(5, 1);
    y << 1, 2, 3, 4, 10;
    const auto fit = lsmc_regress(x, y, 0.0);
    for (Eigen::Index r = 0; r < 5; ++r) CHECK_THAT(fit.fitted(r, 0), WithinAbs(4.0, 1e-14));
}

TEST_CASE("noisy linear model: coefficients within three classical standard errors") {
    std::mt19937_64 gen(2);
    std::normal_distribution<double> noise(0.0, 0.7);
    const Eigen::MatrixXd x = random_features(10000, 3, gen);
    Eigen::VectorXd beta(3);
    beta << 0.4, -1.1, 2.0;
    Eigen::MatrixXd y = x * beta;
    for (Eigen::Index r = 0; r < y.rows(); ++r) y(r, 0) += noise(gen);
    const auto fit = lsmc_regress(x, y, 0.0);
    const Eigen::MatrixXd cov = (x.transpose() * x).inverse();
    const double sigma2 = (y - fit.fitted).squaredNorm() / static_cast<double>(x.rows() - x.cols());
    for (Eigen::Index k = 0; k < 3; ++k) {
        CHECK(std::abs(fit.coefficients(k, 0) - beta[k]) <= 3.0 * std::sqrt(sigma2 * cov(k, k)));
    }
}

TEST_CASE("regression errors") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 1, 1, 1, 1, 1, 1, 1;
    const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(4, 1);
    CHECK_THROWS_AS(lsmc_regress(x, y, 0.0), DegenerateBasisError);
    CHECK_NOTHROW(lsmc_regress(x, y, 1e-6));
    CHECK_THROWS_AS(lsmc_regress(x, Eigen::MatrixXd::Ones(3, 1), 0.0), DomainError);
    CHECK_THROWS_AS(lsmc_regress(x, y, -1.0), DomainError);
}

TEST_CASE("polynomial basis") {
    const RegressionBasis basis(2, 2);
    CHECK(basis.size(1) == 3);
    CHECK(basis.size(5) == 6);
    Eigen::VectorXd x(3);
    x << 2, 3, 7;
    Eigen::RowVectorXd row(6);
    basis.evaluate(x, row);
    Eigen::RowVectorXd expect(6);
    expect << 1, 2, 3, 4, 6, 9;
    CHECK(row == expect);
    CHECK(RegressionBasis(0).size(4) == 1);
    CHECK(RegressionBasis(1, 4).size(6) == 5);
    CHECK_THROWS_AS(RegressionBasis(3), DomainError);
    CHECK_THROWS_AS(basis.check_overfit(4, 59), DomainError);
    CHECK_NOTHROW(basis.check_overfit(4, 60));

    PathField states(3, 2, 3);
    states.at(1, 1) = x;
    const Eigen::MatrixXd d = basis.design(states, 1);
    CHECK(d.row(1) == expect);
    CHECK(d.row(0) == (Eigen::RowVectorXd(6) << 1, 0, 0, 0, 0, 0).finished());
}

TEST_CASE("conditional expectation drops constant columns") {
    std::mt19937_64 gen(5);
    Eigen::MatrixXd d = random_features(500, 3, gen);
    d.col(2).setConstant(4.0);
    const Eigen::MatrixXd y = 3.0 * d.col(1) + Eigen::VectorXd::Constant(500, 1.0);
    const Eigen::MatrixXd fitted = conditional_expectation(d, y, 0.0);
    CHECK((fitted - y).cwiseAbs().maxCoeff() < 1e-10);
}
