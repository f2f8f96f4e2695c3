#include "smpkit/brownian.hpp"

#include "smpkit/error.hpp"
#include "smpkit/kernels.hpp"

#include <cmath>
#include <random>

namespace smpkit {

TimeGrid::TimeGrid(double t0, double T, std::size_t n_steps) : t0_(t0), T_(T), n_steps_(n_steps) {
    if (n_steps == 0) {
        throw DomainError("TimeGrid: n_steps must be >= 1");
    }
    if (!(T > t0) || !std::isfinite(T) || !std::isfinite(t0)) {
        throw DomainError("TimeGrid: need finite T > t0");
    }
}

TimeGrid TimeGrid::from_dt(double T, double dt) {
    if (!(dt > 0.0) || !(T > 0.0)) {
        throw DomainError("TimeGrid::from_dt: need T > 0 and dt > 0");
    }
    const auto n = static_cast<std::size_t>(std::llround(T / dt));
    return TimeGrid(0.0, T, n == 0 ? 1 : n);
}

BrownianEnsemble::BrownianEnsemble(TimeGrid grid, std::size_t n_paths, std::uint64_t seed,
                                   std::vector<double> increments)
    : grid_(grid), n_paths_(n_paths), seed_(seed), increments_(std::move(increments)) {
    if (n_paths == 0) {
        throw DomainError("BrownianEnsemble: n_paths must be >= 1");
    }
    if (increments_.size() != n_paths * grid_.n_steps()) {
        throw DomainError("BrownianEnsemble: increment array has the wrong size");
    }
    const std::size_t n = grid_.n_steps();
    levels_.assign(n_paths * (n + 1), 0.0);
    for (std::size_t p = 0; p < n_paths; ++p) {
        double w = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            w += increments_[p * n + j];
            levels_[p * (n + 1) + j + 1] = w;
        }
    }
}

BrownianEnsemble sample_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
    if (n_paths == 0) {
        throw DomainError("sample_brownian: n_paths must be >= 1");
    }
    const std::size_t n = grid.n_steps();
    const double scale = std::sqrt(grid.dt());
    std::vector<double> inc(n_paths * n);
    kernels::for_each_path(n_paths, [&](std::size_t p) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(p & 0xffffffffu),
                          static_cast<std::uint32_t>(static_cast<std::uint64_t>(p) >> 32)};
        std::mt19937_64 gen(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t j = 0; j < n; ++j) inc[p * n + j] = scale * normal(gen);
    });
    return BrownianEnsemble(grid, n_paths, seed, std::move(inc));
}

}  // namespace smpkit
