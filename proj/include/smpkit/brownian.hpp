#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace smpkit {

/// Uniform grid t_j = t0 + j dt, j = 0..n_steps.
class TimeGrid {
public:
    TimeGrid(double t0, double T, std::size_t n_steps);

    double t0() const noexcept { return t0_; }
    double T() const noexcept { return T_; }
    std::size_t n_steps() const noexcept { return n_steps_; }
    double dt() const noexcept { return (T_ - t0_) / static_cast<double>(n_steps_); }
    double t(std::size_t j) const noexcept { return t0_ + static_cast<double>(j) * dt(); }

    /// Grid on [0, T] with the step count rounded from T / dt.
    static TimeGrid from_dt(double T, double dt);

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double t0_;
    double T_;
    std::size_t n_steps_;
};

/// Seed lineage of an ensemble. Every object derived from an ensemble keeps a
/// copy so that mixing ensembles can be detected.
struct EnsembleId {
    std::uint64_t seed = 0;
    std::size_t n_paths = 0;
    std::size_t n_steps = 0;
    double t0 = 0.0;
    double T = 0.0;

    friend bool operator==(const EnsembleId&, const EnsembleId&) = default;
};

/// n_paths x n_steps Brownian increments on a TimeGrid, plus running levels w(t_j).
class BrownianEnsemble {
public:
    /// Takes increments in path-major order (n_paths * n_steps values).
    BrownianEnsemble(TimeGrid grid, std::size_t n_paths, std::uint64_t seed,
                     std::vector<double> increments);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t n_paths() const noexcept { return n_paths_; }
    std::size_t n_steps() const noexcept { return grid_.n_steps(); }
    std::uint64_t seed() const noexcept { return seed_; }
    EnsembleId id() const noexcept {
        return {seed_, n_paths_, grid_.n_steps(), grid_.t0(), grid_.T()};
    }

    /// Delta w_j = w(t_{j+1}) - w(t_j).
    double increment(std::size_t path, std::size_t step) const noexcept {
        return increments_[path * grid_.n_steps() + step];
    }
    /// w(t_j) - w(t_0).
    double level(std::size_t path, std::size_t step) const noexcept {
        return levels_[path * (grid_.n_steps() + 1) + step];
    }

    const std::vector<double>& increments() const noexcept { return increments_; }

    friend bool operator==(const BrownianEnsemble& a, const BrownianEnsemble& b) {
        return a.grid_ == b.grid_ && a.n_paths_ == b.n_paths_ && a.seed_ == b.seed_ &&
               a.increments_ == b.increments_;
    }

private:
    TimeGrid grid_;
    std::size_t n_paths_;
    std::uint64_t seed_;
    std::vector<double> increments_;
    std::vector<double> levels_;
};

/// Gaussian N(0, dt) increments. Path p draws from its own generator stream,
/// a pure function of (seed, p), so the result is independent of scheduling.
BrownianEnsemble sample_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed);

}  // namespace smpkit
