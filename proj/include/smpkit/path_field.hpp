#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace smpkit {

/// Dense n_paths x n_times x dim array of doubles, path-major.
///
/// Each path owns a contiguous block, so forward sweeps can run one path per
/// worker without sharing cache lines across paths.
class PathField {
public:
    PathField() = default;
    PathField(std::size_t n_paths, std::size_t n_times, std::size_t dim, double fill = 0.0);

    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t n_times() const noexcept { return n_times_; }
    std::size_t dim() const noexcept { return dim_; }
    bool empty() const noexcept { return data_.empty(); }

    Eigen::Map<Eigen::VectorXd> at(std::size_t path, std::size_t step) {
        return {data_.data() + offset(path, step), static_cast<Eigen::Index>(dim_)};
    }
    Eigen::Map<const Eigen::VectorXd> at(std::size_t path, std::size_t step) const {
        return {data_.data() + offset(path, step), static_cast<Eigen::Index>(dim_)};
    }

    /// Values of every path at one time index, as an n_paths x dim matrix.
    Eigen::MatrixXd slice(std::size_t step) const;
    void set_slice(std::size_t step, const Eigen::MatrixXd& values);

    std::span<const double> raw() const noexcept { return data_; }
    std::span<double> raw() noexcept { return data_; }

    friend bool operator==(const PathField&, const PathField&) = default;

private:
    std::size_t offset(std::size_t path, std::size_t step) const noexcept {
        return (path * n_times_ + step) * dim_;
    }

    std::size_t n_paths_ = 0;
    std::size_t n_times_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Time-indexed n x n matrices, either shared by all paths or stored per path.
///
/// Matrices are stored column-major, which is also the vectorization order
/// used when a matrix equation is solved as an n^2-dimensional vector one.
class MatrixProcess {
public:
    MatrixProcess() = default;

    static MatrixProcess deterministic(const std::vector<Eigen::MatrixXd>& per_step);
    static MatrixProcess constant(const Eigen::MatrixXd& m, std::size_t n_times);
    static MatrixProcess zero(std::size_t n, std::size_t n_times);
    /// Storage for per-path matrices, initialised to zero.
    static MatrixProcess per_path(std::size_t n_paths, std::size_t n_times, std::size_t n);

    bool is_deterministic() const noexcept { return deterministic_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t n_times() const noexcept { return field_.n_times(); }
    /// 1 for deterministic processes.
    std::size_t n_paths() const noexcept { return field_.n_paths(); }

    /// Path index is ignored for deterministic processes.
    Eigen::Map<const Eigen::MatrixXd> at(std::size_t path, std::size_t step) const {
        const auto v = field_.at(deterministic_ ? 0 : path, step);
        return {v.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_)};
    }
    Eigen::Map<Eigen::MatrixXd> at(std::size_t path, std::size_t step) {
        auto v = field_.at(deterministic_ ? 0 : path, step);
        return {v.data(), static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(n_)};
    }

    const PathField& field() const noexcept { return field_; }
    PathField& field() noexcept { return field_; }

    /// max over all stored entries of |M - M^T|.
    double max_asymmetry() const;
    /// max over all stored entries of |M|.
    double max_abs() const;

    MatrixProcess scaled(double factor) const;
    /// this + factor * other; deterministic only if both are.
    MatrixProcess plus(const MatrixProcess& other, double factor, std::size_t n_paths) const;

private:
    bool deterministic_ = true;
    std::size_t n_ = 0;
    PathField field_;
};

}  // namespace smpkit
