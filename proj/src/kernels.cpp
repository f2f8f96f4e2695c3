#include "smpkit/kernels.hpp"

#include "smpkit/error.hpp"

#include <omp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <vector>

namespace smpkit::kernels {

namespace {
std::atomic<Backend> g_backend{Backend::kOpenMP};
std::atomic<int> g_workers{0};
}  // namespace

void set_backend(Backend backend) noexcept { g_backend.store(backend); }
Backend backend() noexcept { return g_backend.load(); }

void set_workers(int n) noexcept { g_workers.store(n > 0 ? n : 0); }
int workers() noexcept {
    const int n = g_workers.load();
    return n > 0 ? n : omp_get_max_threads();
}

namespace detail {
void record_failure(std::size_t index, std::exception_ptr error, std::size_t& first_index,
                    std::exception_ptr& first_error) noexcept {
#pragma omp critical(smpkit_failure)
    {
        if (index < first_index) {
            first_index = index;
            first_error = std::move(error);
        }
    }
}
}  // namespace detail

namespace {
void check_rows(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
    if (features.rows() != targets.rows()) {
        throw DomainError("normal equations: features and targets have different row counts");
    }
}
}  // namespace

NormalEquations normal_equations_serial(const Eigen::MatrixXd& features,
                                        const Eigen::MatrixXd& targets) {
    check_rows(features, targets);
    const Eigen::Index p = features.cols();
    const Eigen::Index q = targets.cols();
    NormalEquations out{Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Zero(p, q)};
    for (Eigen::Index r = 0; r < features.rows(); ++r) {
        for (Eigen::Index a = 0; a < p; ++a) {
            const double fa = features(r, a);
            for (Eigen::Index b = 0; b < p; ++b) out.gram(a, b) += fa * features(r, b);
            for (Eigen::Index c = 0; c < q; ++c) out.cross(a, c) += fa * targets(r, c);
        }
    }
    return out;
}

NormalEquations normal_equations_parallel(const Eigen::MatrixXd& features,
                                          const Eigen::MatrixXd& targets) {
    check_rows(features, targets);
    const Eigen::Index p = features.cols();
    const Eigen::Index q = targets.cols();
    const auto rows = static_cast<std::size_t>(features.rows());
    const std::size_t n_blocks = (rows + kReductionBlock - 1) / kReductionBlock;
    std::vector<NormalEquations> partial(n_blocks);
    const auto count = static_cast<std::ptrdiff_t>(n_blocks);
#pragma omp parallel for schedule(static) num_threads(workers())
    for (std::ptrdiff_t b = 0; b < count; ++b) {
        const auto start = static_cast<Eigen::Index>(static_cast<std::size_t>(b) * kReductionBlock);
        const auto len = static_cast<Eigen::Index>(
            std::min(kReductionBlock, rows - static_cast<std::size_t>(start)));
        const auto fb = features.middleRows(start, len);
        auto& slot = partial[static_cast<std::size_t>(b)];
        slot.gram = fb.transpose() * fb;
        slot.cross = fb.transpose() * targets.middleRows(start, len);
    }
    NormalEquations out{Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Zero(p, q)};
    for (const auto& slot : partial) {
        out.gram += slot.gram;
        out.cross += slot.cross;
    }
    return out;
}

NormalEquations normal_equations(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets) {
    return backend() == Backend::kSerial ? normal_equations_serial(features, targets)
                                         : normal_equations_parallel(features, targets);
}

Moments moments(std::span<const double> values) {
    Moments m;
    if (values.empty()) return m;
    double sum = 0.0;
    for (double v : values) sum += v;
    const auto n = static_cast<double>(values.size());
    m.mean = sum / n;
    if (values.size() < 2) return m;
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.std_error = std::sqrt(ss / (n - 1.0) / n);
    return m;
}

}  // namespace smpkit::kernels
