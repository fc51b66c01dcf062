#pragma once

#include <span>
#include <string>
#include <vector>

namespace fcev {

/// Piecewise-linear curve y(x) over strictly increasing abscissae.
class Curve {
public:
    Curve() = default;
    Curve(std::string name, std::vector<double> x, std::vector<double> y);

    /// Interpolated value; throws RangeError outside [x_min, x_max].
    double operator()(double x) const;
    /// Interpolated value with x clamped to the curve domain.
    double clamped(double x) const;

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    const std::vector<double>& xs() const { return x_; }
    const std::vector<double>& ys() const { return y_; }
    const std::string& name() const { return name_; }
    bool empty() const { return x_.empty(); }

private:
    double interpolate(double x) const;

    std::string name_;
    std::vector<double> x_;
    std::vector<double> y_;
};

/// Rectangular grid z(a, b) with bilinear interpolation. Values are row-major in a.
class Grid2D {
public:
    Grid2D() = default;
    Grid2D(std::string a_name, std::vector<double> a, std::string b_name, std::vector<double> b,
           std::vector<double> values);

    /// Throws RangeError naming the offending axis when outside the grid.
    double operator()(double a, double b) const;

    const std::vector<double>& a_axis() const { return a_; }
    const std::vector<double>& b_axis() const { return b_; }
    const std::vector<double>& values() const { return z_; }
    double at(std::size_t ia, std::size_t ib) const { return z_[ia * b_.size() + ib]; }

private:
    std::string a_name_, b_name_;
    std::vector<double> a_, b_, z_;
};

/// Index i such that axis[i] <= x <= axis[i+1]; axis must hold >= 2 points and x inside it.
std::size_t bracket(std::span<const double> axis, double x);

/// Evenly spaced points, endpoints exact.
std::vector<double> linspace(double lo, double hi, std::size_t count);

}  // namespace fcev
