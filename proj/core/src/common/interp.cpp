#include "fcev/common/interp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fcev/common/error.hpp"

namespace fcev {

namespace {

void require_increasing(const std::string& name, const std::vector<double>& x) {
    if (x.size() < 2) throw ValidationError(name + ": needs at least two points");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i])) throw ValidationError(name + ": non-finite abscissa");
        if (i > 0 && !(x[i] > x[i - 1])) throw ValidationError(name + ": abscissae must be strictly increasing");
    }
}

[[noreturn]] void out_of_range(const std::string& axis, double v, double lo, double hi) {
    std::ostringstream os;
    os << axis << ": value " << v << " outside [" << lo << ", " << hi << "]";
    throw RangeError(axis, os.str());
}

}  // namespace

std::size_t bracket(std::span<const double> axis, double x) {
    auto it = std::upper_bound(axis.begin(), axis.end(), x);
    std::size_t i = it == axis.begin() ? 0 : static_cast<std::size_t>(it - axis.begin()) - 1;
    return std::min(i, axis.size() - 2);
}

std::vector<double> linspace(double lo, double hi, std::size_t count) {
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    out.back() = hi;
    return out;
}

Curve::Curve(std::string name, std::vector<double> x, std::vector<double> y)
    : name_(std::move(name)), x_(std::move(x)), y_(std::move(y)) {
    require_increasing(name_, x_);
    if (x_.size() != y_.size()) throw ValidationError(name_ + ": x and y lengths differ");
    for (double v : y_) {
        if (!std::isfinite(v)) throw ValidationError(name_ + ": non-finite ordinate");
    }
}

double Curve::interpolate(double x) const {
    std::size_t i = bracket(x_, x);
    double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
    if (w == 0.0) return y_[i];
    if (w == 1.0) return y_[i + 1];
    return y_[i] + w * (y_[i + 1] - y_[i]);
}

double Curve::operator()(double x) const {
    if (!(x >= x_.front() && x <= x_.back())) out_of_range(name_, x, x_.front(), x_.back());
    return interpolate(x);
}

double Curve::clamped(double x) const { return interpolate(std::clamp(x, x_.front(), x_.back())); }

Grid2D::Grid2D(std::string a_name, std::vector<double> a, std::string b_name, std::vector<double> b,
               std::vector<double> values)
    : a_name_(std::move(a_name)), b_name_(std::move(b_name)), a_(std::move(a)), b_(std::move(b)),
      z_(std::move(values)) {
    require_increasing(a_name_, a_);
    require_increasing(b_name_, b_);
    if (z_.size() != a_.size() * b_.size()) throw ValidationError("grid value count does not match axes");
}

double Grid2D::operator()(double a, double b) const {
    if (!(a >= a_.front() && a <= a_.back())) out_of_range(a_name_, a, a_.front(), a_.back());
    if (!(b >= b_.front() && b <= b_.back())) out_of_range(b_name_, b, b_.front(), b_.back());
    std::size_t i = bracket(a_, a);
    std::size_t j = bracket(b_, b);
    double wa = (a - a_[i]) / (a_[i + 1] - a_[i]);
    double wb = (b - b_[j]) / (b_[j + 1] - b_[j]);
    double z00 = at(i, j), z01 = at(i, j + 1), z10 = at(i + 1, j), z11 = at(i + 1, j + 1);
    return (1 - wa) * ((1 - wb) * z00 + wb * z01) + wa * ((1 - wb) * z10 + wb * z11);
}

}  // namespace fcev
