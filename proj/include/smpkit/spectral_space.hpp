#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace smpkit {

/// Coefficients of an element of H against the orthonormal eigenbasis {e_k}.
using SpectralVector = Eigen::VectorXd;

/// Diagonal generator data: the eigenvalues of A on a truncated eigenbasis.
///
/// Immutable after construction. The semigroup S(t) generated by A acts on
/// mode k by multiplication with exp(mu_k t).
class OperatorSpec {
public:
    /// Throws DomainError on an empty or non-finite spectrum or length <= 0.
    explicit OperatorSpec(std::vector<double> eigenvalues, double domain_length = 1.0);

    std::size_t n_modes() const noexcept { return eigenvalues_.size(); }
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    double eigenvalue(std::size_t k) const { return eigenvalues_.at(k); }
    double domain_length() const noexcept { return domain_length_; }

    /// All eigenvalues strictly negative and strictly decreasing in k.
    bool is_dissipative() const noexcept;

    /// Per-mode factors exp(mu_k dt). dt must be non-negative.
    Eigen::VectorXd semigroup_factors(double dt) const;

private:
    std::vector<double> eigenvalues_;
    double domain_length_;
};

/// Dirichlet Laplacian on (0, length): mu_k = -(k pi / length)^2, k = 1..n_modes.
OperatorSpec make_dirichlet_laplacian(std::size_t n_modes, double length);

/// S(dt) v computed diagonally.
SpectralVector semigroup_apply(const OperatorSpec& op, double dt, const SpectralVector& v);

/// Yosida approximation A_lambda = lambda A (lambda - A)^{-1}; eigenvalue
/// lambda mu / (lambda - mu). Throws SingularResolventError when lambda hits
/// the spectrum and DomainError when lambda <= 0.
OperatorSpec yosida_generator(const OperatorSpec& op, double lambda);

/// Gamma_m: keep the first m coefficients.
SpectralVector project(const SpectralVector& v, std::size_t m);

/// Embed a truncated vector into dimension n by zero padding.
SpectralVector embed(const SpectralVector& v, std::size_t n);

double inner(const SpectralVector& u, const SpectralVector& v);
double norm(const SpectralVector& v);

/// Throws DomainError unless v.size() == op.n_modes().
void require_dimension(const OperatorSpec& op, const SpectralVector& v, const char* what);

}  // namespace smpkit
