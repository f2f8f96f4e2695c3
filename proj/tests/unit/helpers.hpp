#pragma once

#include "smpkit/scenario.hpp"
#include "smpkit/spectral_space.hpp"

#include <Eigen/Dense>

#include <string>

namespace testing {

inline smpkit::ControlSet unit_box(std::size_t m, double bound = 5.0) {
    return smpkit::ControlSet::box(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), -bound),
                                   Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), bound));
}

/// dx = (A x + J x + B u) dt + (K x + sigma) dw with the given costs.
inline smpkit::Scenario linear_scenario(const smpkit::OperatorSpec& op, Eigen::MatrixXd J, Eigen::MatrixXd K,
                                        Eigen::VectorXd sigma, double running = 0.0, double terminal = 0.0) {
    const auto n = static_cast<Eigen::Index>(op.n_modes());
    return smpkit::Scenario{
        "linear",
        op,
        1,
        unit_box(1),
        1.0,
        [J, n](double, const Eigen::VectorXd& x, const Eigen::VectorXd& u) -> Eigen::VectorXd {
            Eigen::VectorXd a = J * x;
            a[0] += u[0];
            (void)n;
            return a;
        },
        [K, sigma](double, const Eigen::VectorXd& x, const Eigen::VectorXd&) -> Eigen::VectorXd {
            return K * x + sigma;
        },
        [running](double, const Eigen::VectorXd&, const Eigen::VectorXd&) { return running; },
        [terminal](const Eigen::VectorXd&) { return terminal; },
        {},
        false,
    };
}

inline Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out[i++] = x;
    return out;
}

}  // namespace testing
