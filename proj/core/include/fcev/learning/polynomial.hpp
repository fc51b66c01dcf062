#pragma once

#include <span>
#include <vector>

namespace fcev::learning {

/// Power series sum a_j x^j valid on [domain_min, domain_max].
struct Polynomial {
    std::vector<double> coeffs;
    double domain_min = 0.0;
    double domain_max = 0.0;
    double fit_rmse = 0.0;

    /// Throws DomainError outside the fitted domain.
    double operator()(double x) const;
    double eval_unchecked(double x) const;
    bool covers(double x) const;
    std::size_t degree() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }
};

/// Degree-7 curve of SOC change rate against battery power.
using SocPolynomial = Polynomial;

/// Least squares in an abscissa rescaled to [-1, 1]; coefficients are returned
/// in original units. Throws FitError with fewer distinct abscissae than coefficients.
Polynomial fit_polynomial(std::span<const double> x, std::span<const double> y, std::size_t degree);
inline SocPolynomial fit_soc_polynomial(std::span<const double> x, std::span<const double> y) {
    return fit_polynomial(x, y, 7);
}

}  // namespace fcev::learning
