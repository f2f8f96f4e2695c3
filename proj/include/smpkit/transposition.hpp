#pragma once

#include "smpkit/adjoint_bsde.hpp"
#include "smpkit/brownian.hpp"
#include "smpkit/forward_see.hpp"
#include "smpkit/lsmc.hpp"
#include "smpkit/second_adjoint.hpp"
#include "smpkit/spectral_space.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace smpkit {

/// |residual| <= k_sigma * stderr + c_bias * dt.
struct PassRule {
    double k_sigma = 3.0;
    double c_bias = 0.0;
};

struct IdentityReport {
    std::string identity;
    std::size_t n_paths = 0;
    double dt = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;
    double std_error = 0.0;  // of the per-path residual
    double bias_budget = 0.0;
    bool pass = false;
};

/// Builds a report from per-path values of both sides.
IdentityReport make_identity_report(std::string identity, const std::vector<double>& lhs,
                                    const std::vector<double>& rhs, double dt, const PassRule& rule);

/// Test data for the first-order identity: dz = (A z + v1) dt + v2 dw on
/// (t, T], z(t) = eta.
struct FirstOrderTest {
    std::size_t t_index = 0;
    InitialState eta = SpectralVector();
    VectorProcess v1;
    VectorProcess v2;
};

/// f(t_j, y_j, Y_j) for every path and step, the driver values entering
///     E<z(T), y_T> - E int <z, f> = E<eta, y(t)> + E int <v1, y> + E int <v2, Y>.
PathField driver_values(const BsdeDriver& driver, const AdjointPair& pair);

/// Checks the first-order duality identity under left-endpoint quadrature.
/// z is streamed path by path on ens, which must be the ensemble of pair.
/// y_T is read from the terminal slice of pair.y.
IdentityReport verify_first_identity(const AdjointPair& pair, const OperatorSpec& op,
                                     const PathField& f_values, const FirstOrderTest& test,
                                     const BrownianEnsemble& ens, const PassRule& rule = {});

/// Test data for the second-order identity: for i = 1, 2,
///     dx_i = ((A + J) x_i + u_i) dt + (K x_i + v_i) dw,  x_i(t) = xi_i.
struct SecondOrderTest {
    std::size_t t_index = 0;
    InitialState xi1 = SpectralVector();
    InitialState xi2 = SpectralVector();
    VectorProcess u1, u2, v1, v2;
};

/// Checks
///     E<P_T x1(T), x2(T)> - E int <F x1, x2>
///       = E<P(t) xi1, xi2> + E int [<P u1, x2> + <P x1, u2> + <P K x1, v2>
///                                   + <P v1, K x2 + v2> + <Q v1, x2> + <Q x1, v2>].
IdentityReport verify_second_identity(const SecondOrderAdjoint& sa, const OperatorSpec& op,
                                      const SecondOrderData& data, const SecondOrderTest& test,
                                      const BrownianEnsemble& ens, const PassRule& rule = {});

/// Randomized adapted test data on the t-grid {0, N/4, N/2, 3N/4}:
/// eta = a + b * xbar(t), v1 = c sin(omega t) + d w(t), v2 = e cos(omega t).
/// Coefficient vectors are drawn from N(0, 1) with a generator seeded by
/// (seed, index). ens and trajectory must outlive the returned processes.
FirstOrderTest random_first_test(std::size_t index, std::uint64_t seed,
                                 const StateEnsemble& trajectory, const BrownianEnsemble& ens);

/// Same construction for the second-order identity: xi_i = a_i + b_i * xbar(t),
/// u_i = c_i sin(omega t), v_i = d_i cos(omega t) + e_i w(t).
SecondOrderTest random_second_test(std::size_t index, std::uint64_t seed,
                                   const StateEnsemble& trajectory, const BrownianEnsemble& ens);

/// The t-grid {0, N/4, N/2, 3N/4} used for identity tests.
std::vector<std::size_t> identity_time_grid(std::size_t n_steps);

struct LipschitzRow {
    double delta = 0.0;
    double max_discrepancy = 0.0;
    double ratio = 0.0;  // max_discrepancy / delta, 0 for delta = 0
};

struct LipschitzReport {
    std::vector<LipschitzRow> rows;
    /// max ratio / min ratio over rows with delta > 0.
    double spread = 0.0;
    bool pass = false;  // spread <= 2
};

/// Q-pairing D_K(v) = E int <Q x1, v> dt, x1 solving the linearized equation
/// from 0 with u = 0 and diffusion forcing v, all under coefficient K.
double q_pairing(const SecondOrderAdjoint& sa, const OperatorSpec& op, const SecondOrderData& data,
                 const VectorProcess& v, const BrownianEnsemble& ens);

/// For each delta, solves the second-order equation with K + delta * K_direction
/// on the same ensemble and reports max over probes of |D_{K+delta}(v) - D_K(v)| / delta.
LipschitzReport lipschitz_probe(const OperatorSpec& op, const SecondOrderData& base,
                                const MatrixProcess& K_direction, const std::vector<double>& deltas,
                                const std::vector<VectorProcess>& probes,
                                const StateEnsemble& conditioning, const BrownianEnsemble& ens,
                                const RegressionBasis& basis);

}  // namespace smpkit
