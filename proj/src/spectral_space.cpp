#include "smpkit/spectral_space.hpp"

#include "smpkit/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace smpkit {

OperatorSpec::OperatorSpec(std::vector<double> eigenvalues, double domain_length)
    : eigenvalues_(std::move(eigenvalues)), domain_length_(domain_length) {
    if (eigenvalues_.empty()) {
        throw DomainError("OperatorSpec: spectrum must contain at least one mode");
    }
    if (!(domain_length_ > 0.0) || !std::isfinite(domain_length_)) {
        throw DomainError("OperatorSpec: domain length must be positive and finite");
    }
    for (double mu : eigenvalues_) {
        if (!std::isfinite(mu)) {
            throw DomainError("OperatorSpec: eigenvalues must be finite");
        }
    }
}

bool OperatorSpec::is_dissipative() const noexcept {
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
        if (!(eigenvalues_[k] < 0.0)) return false;
        if (k > 0 && !(eigenvalues_[k] < eigenvalues_[k - 1])) return false;
    }
    return true;
}

Eigen::VectorXd OperatorSpec::semigroup_factors(double dt) const {
    if (!(dt >= 0.0)) {
        throw DomainError("semigroup: dt must be non-negative");
    }
    Eigen::VectorXd f(static_cast<Eigen::Index>(eigenvalues_.size()));
    for (std::size_t k = 0; k < eigenvalues_.size(); ++k) {
        f[static_cast<Eigen::Index>(k)] = std::exp(eigenvalues_[k] * dt);
    }
    return f;
}

OperatorSpec make_dirichlet_laplacian(std::size_t n_modes, double length) {
    if (n_modes == 0) {
        throw DomainError("make_dirichlet_laplacian: n_modes must be >= 1");
    }
    if (!(length > 0.0)) {
        throw DomainError("make_dirichlet_laplacian: length must be > 0");
    }
    std::vector<double> mu(n_modes);
    for (std::size_t k = 0; k < n_modes; ++k) {
        const double w = static_cast<double>(k + 1) * std::numbers::pi / length;
        mu[k] = -w * w;
    }
    return OperatorSpec(std::move(mu), length);
}

void require_dimension(const OperatorSpec& op, const SpectralVector& v, const char* what) {
    if (static_cast<std::size_t>(v.size()) != op.n_modes()) {
        throw DomainError(std::string(what) + ": dimension " + std::to_string(v.size()) +
                          " does not match operator with " + std::to_string(op.n_modes()) +
                          " modes");
    }
}

SpectralVector semigroup_apply(const OperatorSpec& op, double dt, const SpectralVector& v) {
    require_dimension(op, v, "semigroup_apply");
    return op.semigroup_factors(dt).cwiseProduct(v);
}

OperatorSpec yosida_generator(const OperatorSpec& op, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw DomainError("yosida_generator: lambda must be positive and finite");
    }
    std::vector<double> mu(op.n_modes());
    for (std::size_t k = 0; k < op.n_modes(); ++k) {
        const double m = op.eigenvalue(k);
        if (m == lambda) {
            throw SingularResolventError("yosida_generator: lambda lies in the spectrum (mode " +
                                         std::to_string(k + 1) + ")");
        }
        mu[k] = lambda * m / (lambda - m);
    }
    return OperatorSpec(std::move(mu), op.domain_length());
}

SpectralVector project(const SpectralVector& v, std::size_t m) {
    if (m > static_cast<std::size_t>(v.size())) {
        throw DomainError("project: target dimension exceeds vector dimension");
    }
    return v.head(static_cast<Eigen::Index>(m));
}

SpectralVector embed(const SpectralVector& v, std::size_t n) {
    if (n < static_cast<std::size_t>(v.size())) {
        throw DomainError("embed: target dimension smaller than vector dimension");
    }
    SpectralVector out = SpectralVector::Zero(static_cast<Eigen::Index>(n));
    out.head(v.size()) = v;
    return out;
}

double inner(const SpectralVector& u, const SpectralVector& v) {
    if (u.size() != v.size()) {
        throw DomainError("inner: dimension mismatch");
    }
    return u.dot(v);
}

double norm(const SpectralVector& v) { return std::sqrt(v.dot(v)); }

}  // namespace smpkit
