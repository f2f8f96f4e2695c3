#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <exception>
#include <limits>
#include <span>

namespace smpkit::kernels {

/// Execution backend for the data-parallel inner loops.
///
/// kOpenMP is the production path. kSerial is the plain reference
/// implementation kept for testing; per-path results are bit-identical
/// between the two, reductions agree to rounding.
enum class Backend { kSerial, kOpenMP };

void set_backend(Backend backend) noexcept;
Backend backend() noexcept;

/// Parallelism budget for kOpenMP. Results never depend on it.
void set_workers(int n) noexcept;
int workers() noexcept;

/// Row block size of the fixed-partition reductions.
inline constexpr std::size_t kReductionBlock = 512;

namespace detail {
void record_failure(std::size_t index, std::exception_ptr error, std::size_t& first_index,
                    std::exception_ptr& first_error) noexcept;
}  // namespace detail

/// Runs body(i) for i in [0, n). If any iteration throws, the exception of the
/// lowest failing index is rethrown after the loop, whatever the schedule.
template <typename Body>
void for_each_path(std::size_t n, Body&& body) {
    std::size_t first_index = std::numeric_limits<std::size_t>::max();
    std::exception_ptr first_error;
    const auto count = static_cast<std::ptrdiff_t>(n);
    if (backend() == Backend::kSerial) {
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                body(static_cast<std::size_t>(i));
            } catch (...) {
                detail::record_failure(static_cast<std::size_t>(i), std::current_exception(),
                                       first_index, first_error);
            }
        }
    } else {
#pragma omp parallel for schedule(static) num_threads(workers())
        for (std::ptrdiff_t i = 0; i < count; ++i) {
            try {
                body(static_cast<std::size_t>(i));
            } catch (...) {
                detail::record_failure(static_cast<std::size_t>(i), std::current_exception(),
                                       first_index, first_error);
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

struct NormalEquations {
    Eigen::MatrixXd gram;   // X^T X
    Eigen::MatrixXd cross;  // X^T Y
};

/// Reference accumulation, one row at a time.
NormalEquations normal_equations_serial(const Eigen::MatrixXd& features,
                                        const Eigen::MatrixXd& targets);

/// Fixed kReductionBlock partition, blocks summed in index order, so the
/// result is independent of the worker count.
NormalEquations normal_equations_parallel(const Eigen::MatrixXd& features,
                                          const Eigen::MatrixXd& targets);

/// Dispatches on backend().
NormalEquations normal_equations(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets);

struct Moments {
    double mean = 0.0;
    double std_error = 0.0;  // sample std / sqrt(n)
};

/// Mean and standard error with index-order summation.
Moments moments(std::span<const double> values);

}  // namespace smpkit::kernels
