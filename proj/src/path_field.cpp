#include "smpkit/path_field.hpp"

#include "smpkit/error.hpp"

#include <algorithm>
#include <cmath>

namespace smpkit {

PathField::PathField(std::size_t n_paths, std::size_t n_times, std::size_t dim, double fill)
    : n_paths_(n_paths), n_times_(n_times), dim_(dim), data_(n_paths * n_times * dim, fill) {}

Eigen::MatrixXd PathField::slice(std::size_t step) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n_paths_), static_cast<Eigen::Index>(dim_));
    for (std::size_t p = 0; p < n_paths_; ++p) {
        out.row(static_cast<Eigen::Index>(p)) = at(p, step).transpose();
    }
    return out;
}

void PathField::set_slice(std::size_t step, const Eigen::MatrixXd& values) {
    if (static_cast<std::size_t>(values.rows()) != n_paths_ ||
        static_cast<std::size_t>(values.cols()) != dim_) {
        throw DomainError("PathField::set_slice: shape mismatch");
    }
    for (std::size_t p = 0; p < n_paths_; ++p) {
        at(p, step) = values.row(static_cast<Eigen::Index>(p)).transpose();
    }
}

MatrixProcess MatrixProcess::deterministic(const std::vector<Eigen::MatrixXd>& per_step) {
    if (per_step.empty()) {
        throw DomainError("MatrixProcess: no time steps");
    }
    const auto n = static_cast<std::size_t>(per_step.front().rows());
    MatrixProcess mp;
    mp.deterministic_ = true;
    mp.n_ = n;
    mp.field_ = PathField(1, per_step.size(), n * n);
    for (std::size_t j = 0; j < per_step.size(); ++j) {
        const auto& m = per_step[j];
        if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n) {
            throw DomainError("MatrixProcess: every step must hold an n x n matrix");
        }
        mp.at(0, j) = m;
    }
    return mp;
}

MatrixProcess MatrixProcess::constant(const Eigen::MatrixXd& m, std::size_t n_times) {
    return deterministic(std::vector<Eigen::MatrixXd>(n_times, m));
}

MatrixProcess MatrixProcess::zero(std::size_t n, std::size_t n_times) {
    return constant(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)),
                    n_times);
}

MatrixProcess MatrixProcess::per_path(std::size_t n_paths, std::size_t n_times, std::size_t n) {
    MatrixProcess mp;
    mp.deterministic_ = false;
    mp.n_ = n;
    mp.field_ = PathField(n_paths, n_times, n * n);
    return mp;
}

double MatrixProcess::max_asymmetry() const {
    double worst = 0.0;
    for (std::size_t p = 0; p < field_.n_paths(); ++p) {
        for (std::size_t j = 0; j < field_.n_times(); ++j) {
            const auto m = at(p, j);
            worst = std::max(worst, (m - m.transpose()).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

double MatrixProcess::max_abs() const {
    double worst = 0.0;
    for (double v : field_.raw()) worst = std::max(worst, std::abs(v));
    return worst;
}

MatrixProcess MatrixProcess::scaled(double factor) const {
    MatrixProcess out = *this;
    for (double& v : out.field_.raw()) v *= factor;
    return out;
}

MatrixProcess MatrixProcess::plus(const MatrixProcess& other, double factor,
                                  std::size_t n_paths) const {
    if (other.n_ != n_ || other.n_times() != n_times()) {
        throw DomainError("MatrixProcess::plus: shape mismatch");
    }
    if (deterministic_ && other.deterministic_) {
        MatrixProcess out = *this;
        const auto src = other.field_.raw();
        auto dst = out.field_.raw();
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += factor * src[i];
        return out;
    }
    MatrixProcess out = per_path(n_paths, n_times(), n_);
    for (std::size_t p = 0; p < n_paths; ++p) {
        for (std::size_t j = 0; j < n_times(); ++j) {
            out.at(p, j) = at(p, j) + factor * other.at(p, j);
        }
    }
    return out;
}

}  // namespace smpkit
