#include "fcev/learning/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "fcev/common/error.hpp"

namespace fcev::learning {

bool Polynomial::covers(double x) const {
    const double slack = 1e-9 * (domain_max - domain_min);
    return x >= domain_min - slack && x <= domain_max + slack;
}

double Polynomial::eval_unchecked(double x) const {
    double acc = 0.0;
    for (std::size_t j = coeffs.size(); j-- > 0;) acc = acc * x + coeffs[j];
    return acc;
}

double Polynomial::operator()(double x) const {
    if (!covers(x)) {
        throw DomainError("polynomial evaluated at " + std::to_string(x) + " outside [" + std::to_string(domain_min) +
                          ", " + std::to_string(domain_max) + "]");
    }
    return eval_unchecked(x);
}

Polynomial fit_polynomial(std::span<const double> x, std::span<const double> y, std::size_t degree) {
    if (x.size() != y.size()) throw FitError("abscissa and ordinate lengths differ");
    const std::size_t ncoef = degree + 1;
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    const auto distinct = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
    if (distinct < ncoef) {
        throw FitError("degree-" + std::to_string(degree) + " fit needs " + std::to_string(ncoef) +
                       " distinct abscissae, got " + std::to_string(distinct));
    }
    const double lo = sorted.front(), hi = sorted[distinct - 1];
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);

    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd V(n, static_cast<Eigen::Index>(ncoef));
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double t = (x[static_cast<std::size_t>(i)] - c) / h;
        double pw = 1.0;
        for (std::size_t j = 0; j < ncoef; ++j) {
            V(i, static_cast<Eigen::Index>(j)) = pw;
            pw *= t;
        }
        rhs(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
    if (qr.rank() < static_cast<Eigen::Index>(ncoef)) throw FitError("polynomial design matrix is rank deficient");
    const Eigen::VectorXd b = qr.solve(rhs);

    // Expand sum b_k ((x - c)/h)^k into powers of x.
    std::vector<double> a(ncoef, 0.0);
    for (std::size_t k = 0; k < ncoef; ++k) {
        const double scale = b(static_cast<Eigen::Index>(k)) / std::pow(h, static_cast<double>(k));
        // (x - c)^k = sum_j C(k, j) x^j (-c)^(k-j)
        double cjk = 1.0;
        for (std::size_t j = 0; j <= k; ++j) {
            if (j > 0) cjk = cjk * static_cast<double>(k - j + 1) / static_cast<double>(j);
            a[j] += scale * cjk * std::pow(-c, static_cast<double>(k - j));
        }
    }

    Polynomial p;
    p.coeffs = std::move(a);
    p.domain_min = lo;
    p.domain_max = hi;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = p.eval_unchecked(x[i]) - y[i];
        ss += e * e;
    }
    p.fit_rmse = std::sqrt(ss / static_cast<double>(x.size()));
    return p;
}

}  // namespace fcev::learning
