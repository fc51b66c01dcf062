#include "fcev/mpc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "fcev/common/error.hpp"

namespace fcev::mpc {

// ---- observers -------------------------------------------------------------

LinearizedObserver::LinearizedObserver(const powertrain::BatteryModel& battery, const OutputModel& output,
                                       Mode mode, const HorizonProblem& problem, std::span<const double> u_lin)
    : battery_(&battery), output_(&output), mode_(mode) {
    if (mode_ == Mode::frozen) {
        std::vector<double> u(u_lin.begin(), u_lin.end());
        if (u.empty()) {
            for (std::size_t i = 0; i < problem.horizon(); ++i) u.push_back(0.5 * (problem.u_min[i] + problem.u_max[i]));
        }
        frozen_ = model(problem, u);
    }
}

Linearization LinearizedObserver::at(double u, double p_load, double soc) const {
    if (p_load == 0.0) return {};
    const double p = u * p_load;
    const double ocv = battery_->ocv(soc);
    const double r = battery_->resistance(soc, p);
    const double p_fc = p_load - p;
    LinearizationInput in;
    in.u_ocv = ocv;
    in.r_batt = r;
    in.capacity_c = battery_->capacity_coulombs();
    // Keep the root real for candidates past the power limit.
    in.p_batt = std::min(p, (1.0 - 1e-9) * ocv * ocv / (4.0 * r));
    in.p_load = p_load;
    in.c_h2 = p_fc > 0.0 ? output_->fc_rate(p_fc) / p_fc : 0.0;
    in.s_over_q = output_->battery_coefficient();
    return linearize(in);
}

double LinearizedObserver::rate(std::size_t i, double u, double p_load, double soc) const {
    const Linearization l = mode_ == Mode::frozen ? frozen_.steps[i] : at(u, p_load, soc);
    return l.B * u + l.C * p_load;
}

LinearizedModel LinearizedObserver::model(const HorizonProblem& problem, std::span<const double> u) const {
    LinearizedModel m;
    double x = problem.soc_0;
    for (std::size_t i = 0; i < problem.horizon(); ++i) {
        const auto l = at(u[i], problem.p_load_seq[i], x);
        m.steps.push_back(l);
        x += (l.B * u[i] + l.C * problem.p_load_seq[i]) * problem.dt;
    }
    return m;
}

double PolynomialObserver::rate(std::size_t i, double u, double p_load, double) const {
    return polys_[i](u * p_load);
}

std::vector<double> lrmpc_rollout(std::span<const learning::SocPolynomial> polys, const HorizonProblem& problem,
                                  std::span<const double> u) {
    const std::size_t n = problem.horizon();
    if (polys.size() != n || u.size() != n) throw ShapeError("rollout length must match the horizon");
    std::vector<double> soc(n);
    double x = problem.soc_0;
    for (std::size_t i = 0; i < n; ++i) {
        try {
            x += problem.dt * polys[i](u[i] * problem.p_load_seq[i]);
        } catch (const DomainError& e) {
            throw DomainError("step " + std::to_string(i) + ": " + e.what());
        }
        soc[i] = x;
    }
    return soc;
}

// ---- objective ---------------------------------------------------------------

double objective(const HorizonProblem& p, std::span<const double> soc_traj, std::span<const double> y_traj) {
    const std::size_t n = p.horizon();
    if (soc_traj.size() != n || y_traj.size() != n) throw ShapeError("trajectory length must match the horizon");
    double j = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ey = y_traj[i] - p.y_ref;
        const double ex = soc_traj[i] - p.x_ref;
        j += p.k[i] * (p.q1 * ey * ey + p.q2 * (p.squared_state ? ex * ex : ex));
    }
    return j;
}

Evaluation evaluate(const HorizonProblem& p, const StateObserver& observer, const OutputModel& output,
                    std::span<const double> u) {
    const std::size_t n = p.horizon();
    Evaluation e;
    e.trajectory.soc.resize(n);
    e.trajectory.y.resize(n);
    double x = p.soc_0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = p.p_load_seq[i];
        e.trajectory.y[i] = output(u[i], v);
        x += p.dt * observer.rate(i, u[i], v, x);
        e.trajectory.soc[i] = x;
    }
    e.objective = objective(p, e.trajectory.soc, e.trajectory.y);
    return e;
}

// ---- feasible set ------------------------------------------------------------

namespace {

struct Interval {
    double lo, hi;
    bool empty() const { return lo > hi; }
};

Interval intersect(Interval a, Interval b) { return {std::max(a.lo, b.lo), std::min(a.hi, b.hi)}; }

void project_pair(double& a, double& b, double lo, double hi) {
    const double d = b - a;
    const double target = std::clamp(d, lo, hi);
    if (target == d) return;
    const double shift = 0.5 * (target - d);
    b += shift;
    a -= shift;
}

}  // namespace

FeasibleSet feasible_set(const HorizonProblem& p) {
    p.validate();
    const std::size_t n = p.horizon();
    FeasibleSet fs;
    fs.lo.resize(n);
    fs.hi.resize(n);
    fs.linked.assign(n, 0);
    fs.rate_lo = p.dp_fc_min / 1000.0;
    fs.rate_hi = p.dp_fc_max / 1000.0;

    std::vector<Interval> hard(n), band(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double l = p.p_load_seq[i] / 1000.0;
        if (!p.active(i)) {
            hard[i] = band[i] = {0.0, 0.0};
            continue;
        }
        Interval h{std::max(p.p_fc_min / 1000.0, l - p.p_batt_max / 1000.0),
                   std::min(p.p_fc_max / 1000.0, l - p.p_batt_min / 1000.0)};
        const double m = p.m[i], nn = p.n[i];
        if (m > 0.0) {
            h.hi = std::min(h.hi, l * (m + nn) / m);
        } else if (m < 0.0) {
            h.lo = std::max(h.lo, l * (m + nn) / m);
        } else if (nn < 0.0) {
            h.hi = -1.0;
        }
        if (h.empty()) throw InfeasibleProblemError("no feasible fuel-cell power at step " + std::to_string(i));
        hard[i] = h;
        band[i] = {l * (1.0 - p.u_max[i]), l * (1.0 - p.u_min[i])};
    }

    // Forward: reachable sets under the rate bound, then the band.
    for (std::size_t i = 0; i < n; ++i) {
        Interval reach = hard[i];
        if (p.active(i)) {
            const bool chained = i == 0 || p.active(i - 1);
            const double prev_lo = i == 0 ? p.p_fc_prev / 1000.0 : fs.lo[i - 1];
            const double prev_hi = i == 0 ? p.p_fc_prev / 1000.0 : fs.hi[i - 1];
            if (chained) {
                const Interval r = intersect(hard[i], {prev_lo + fs.rate_lo, prev_hi + fs.rate_hi});
                if (r.empty()) {
                    fs.relaxed = true;
                } else {
                    reach = r;
                    fs.linked[i] = i > 0 ? 1 : 0;
                }
            }
        }
        Interval b = intersect(band[i], reach);
        if (b.empty()) {
            fs.relaxed = true;
            const double nearest = band[i].hi < reach.lo ? reach.lo : reach.hi;
            b = {nearest, nearest};
        }
        fs.lo[i] = b.lo;
        fs.hi[i] = b.hi;
    }
    // Backward: keep only points with a feasible successor.
    for (std::size_t i = n; i-- > 1;) {
        if (!fs.linked[i]) continue;
        fs.lo[i - 1] = std::max(fs.lo[i - 1], fs.lo[i] - fs.rate_hi);
        fs.hi[i - 1] = std::min(fs.hi[i - 1], fs.hi[i] - fs.rate_lo);
        if (fs.lo[i - 1] > fs.hi[i - 1]) fs.lo[i - 1] = fs.hi[i - 1] = 0.5 * (fs.lo[i - 1] + fs.hi[i - 1]);
    }
    return fs;
}

void FeasibleSet::project(std::span<double> w) const {
    const std::size_t n = size();
    bool any_link = false;
    for (std::size_t i = 1; i < n; ++i) any_link |= linked[i] != 0;
    if (any_link) {
        // Dykstra over the box and the two families of disjoint pair slabs.
        std::vector<double> x(w.begin(), w.end()), y(n);
        std::vector<std::vector<double>> inc(3, std::vector<double>(n, 0.0));
        for (int cycle = 0; cycle < 500; ++cycle) {
            double moved = 0.0;
            for (int s = 0; s < 3; ++s) {
                for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + inc[s][i];
                if (s == 0) {
                    for (std::size_t i = 0; i < n; ++i) y[i] = std::clamp(y[i], lo[i], hi[i]);
                } else {
                    for (std::size_t i = (s == 1 ? 1 : 2); i < n; i += 2) {
                        if (linked[i]) project_pair(y[i - 1], y[i], rate_lo, rate_hi);
                    }
                }
                for (std::size_t i = 0; i < n; ++i) {
                    inc[s][i] = x[i] + inc[s][i] - y[i];
                    moved = std::max(moved, std::abs(y[i] - x[i]));
                }
                std::swap(x, y);
            }
            if (cycle > 0 && moved < 1e-12) break;
        }
        std::copy(x.begin(), x.end(), w.begin());
    }
    // Forward repair makes the result exactly feasible.
    for (std::size_t i = 0; i < n; ++i) {
        double a = lo[i], b = hi[i];
        if (i > 0 && linked[i]) {
            a = std::max(a, w[i - 1] + rate_lo);
            b = std::min(b, w[i - 1] + rate_hi);
            if (a > b) a = b = std::clamp(0.5 * (a + b), lo[i], hi[i]);
        }
        w[i] = std::clamp(w[i], a, b);
    }
}

bool FeasibleSet::contains(std::span<const double> w, double tol) const {
    for (std::size_t i = 0; i < size(); ++i) {
        if (w[i] < lo[i] - tol || w[i] > hi[i] + tol) return false;
        if (i > 0 && linked[i]) {
            const double d = w[i] - w[i - 1];
            if (d < rate_lo - tol || d > rate_hi + tol) return false;
        }
    }
    return true;
}

// ---- solver ------------------------------------------------------------------

namespace {

/// Objective as a function of fuel-cell power in kW.
class Problem {
public:
    Problem(const HorizonProblem& p, const StateObserver& obs, const OutputModel& out)
        : p_(p), obs_(obs), out_(out), n_(p.horizon()), u_(n_) {}

    std::size_t evaluations = 0;

    double to_u(std::size_t i, double w) const {
        return p_.active(i) ? 1.0 - 1000.0 * w / p_.p_load_seq[i] : 1.0;
    }
    double to_w(std::size_t i, double u) const {
        return p_.active(i) ? (1.0 - u) * p_.p_load_seq[i] / 1000.0 : 0.0;
    }
    std::vector<double> controls(std::span<const double> w) const {
        std::vector<double> u(n_);
        for (std::size_t i = 0; i < n_; ++i) u[i] = to_u(i, w[i]);
        return u;
    }

    Evaluation eval(std::span<const double> w) {
        ++evaluations;
        for (std::size_t i = 0; i < n_; ++i) u_[i] = to_u(i, w[i]);
        return evaluate(p_, obs_, out_, u_);
    }
    double value(std::span<const double> w) { return eval(w).objective; }

    /// Central differences, clipped to the box [lo, hi] per coordinate.
    std::vector<double> gradient(std::vector<double>& w, const FeasibleSet& fs, double rel_step) {
        std::vector<double> g(n_, 0.0);
        if (obs_.state_dependent()) {
            for (std::size_t j = 0; j < n_; ++j) {
                if (fs.hi[j] <= fs.lo[j]) continue;
                const double h = rel_step * std::max(1.0, std::abs(w[j]));
                const double wj = w[j];
                const double wp = std::min(wj + h, fs.hi[j]), wm = std::max(wj - h, fs.lo[j]);
                w[j] = wp;
                const double fp = value(w);
                w[j] = wm;
                const double fm = value(w);
                w[j] = wj;
                g[j] = (fp - fm) / (wp - wm);
            }
            return g;
        }
        // Rates ignore the state: a change at step j shifts every later SOC
        // by the same amount, so each difference costs O(1).
        const auto base = eval(w);
        const auto& x = base.trajectory.soc;
        const auto& y = base.trajectory.y;
        std::vector<double> ksuf(n_ + 1, 0.0), kxsuf(n_ + 1, 0.0);
        for (std::size_t i = n_; i-- > 0;) {
            ksuf[i] = ksuf[i + 1] + p_.k[i];
            kxsuf[i] = kxsuf[i + 1] + p_.k[i] * (x[i] - p_.x_ref);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            if (fs.hi[j] <= fs.lo[j]) continue;
            const double h = rel_step * std::max(1.0, std::abs(w[j]));
            const double wp = std::min(w[j] + h, fs.hi[j]), wm = std::max(w[j] - h, fs.lo[j]);
            const double v = p_.p_load_seq[j];
            const double xprev = j == 0 ? p_.soc_0 : x[j - 1];
            const double r0 = obs_.rate(j, u_[j], v, xprev);
            auto delta_j = [&](double wj) {
                const double u = to_u(j, wj);
                const double dx = p_.dt * (obs_.rate(j, u, v, xprev) - r0);
                const double ey = out_(u, v) - p_.y_ref, ey0 = y[j] - p_.y_ref;
                const double state = p_.squared_state ? 2.0 * dx * kxsuf[j] + dx * dx * ksuf[j] : dx * ksuf[j];
                return p_.k[j] * p_.q1 * (ey * ey - ey0 * ey0) + p_.q2 * state;
            };
            g[j] = (delta_j(wp) - delta_j(wm)) / (wp - wm);
        }
        evaluations += 1;
        return g;
    }

private:
    const HorizonProblem& p_;
    const StateObserver& obs_;
    const OutputModel& out_;
    std::size_t n_;
    std::vector<double> u_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

ControlSolution solve(const HorizonProblem& problem, const StateObserver& observer, const OutputModel& output,
                      const SolverSettings& settings, std::span<const double> initial_u) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto fs = feasible_set(problem);
    const std::size_t n = problem.horizon();
    Problem prob(problem, observer, output);

    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = prob.to_w(i, 0.5 * (problem.u_min[i] + problem.u_max[i]));
    fs.project(w);
    double f = prob.value(w);
    if (initial_u.size() == n) {
        std::vector<double> alt(n);
        for (std::size_t i = 0; i < n; ++i) alt[i] = prob.to_w(i, initial_u[i]);
        fs.project(alt);
        const double fa = prob.value(alt);
        if (fa < f) {
            w = std::move(alt);
            f = fa;
        }
    }

    SolverStats stats;
    stats.relaxed = fs.relaxed;
    auto g = prob.gradient(w, fs, settings.fd_step);
    auto projected_step = [&](double scale) {
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = w[i] - scale * g[i];
        fs.project(d);
        for (std::size_t i = 0; i < n; ++i) d[i] -= w[i];
        return d;
    };
    auto inf_norm = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };

    double pg = inf_norm(projected_step(1.0));
    double alpha = pg > 0.0 ? std::clamp(1.0 / pg, 1e-10, 1e10) : 1.0;
    std::vector<double> trial(n), g_new;
    std::size_t stalled = 0;
    while (stats.iterations < settings.max_iterations) {
        if (pg < settings.tolerance) {
            stats.converged = true;
            break;
        }
        ++stats.iterations;
        auto d = projected_step(alpha);
        double gd = dot(g, d);
        if (!(gd < 0.0)) {
            d = projected_step(1.0);
            gd = dot(g, d);
            if (!(gd < 0.0)) {
                stats.converged = true;
                break;
            }
        }
        double lambda = 1.0, ft = 0.0;
        bool accepted = false;
        while (lambda > 1e-12) {
            for (std::size_t i = 0; i < n; ++i) trial[i] = w[i] + lambda * d[i];
            ft = prob.value(trial);
            if (ft <= f + 1e-4 * lambda * gd) {
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) break;  // no further decrease resolvable at this precision
        g_new = prob.gradient(trial, fs, settings.fd_step);
        double ss = 0.0, sy = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = trial[i] - w[i];
            ss += s * s;
            sy += s * (g_new[i] - g[i]);
        }
        alpha = sy > 0.0 ? std::clamp(ss / sy, 1e-10, 1e10) : 1e10;
        stalled = f - ft <= settings.stall_tolerance * std::max(1.0, std::abs(f)) ? stalled + 1 : 0;
        w.swap(trial);
        g.swap(g_new);
        f = ft;
        if (stalled >= 3) {
            pg = inf_norm(projected_step(1.0));
            break;
        }
        pg = inf_norm(projected_step(1.0));
    }
    if (!stats.converged && pg < settings.tolerance) stats.converged = true;

    ControlSolution sol;
    const auto e = prob.eval(w);
    sol.u_seq = prob.controls(w);
    sol.soc_traj = e.trajectory.soc;
    sol.y_traj = e.trajectory.y;
    sol.objective = e.objective;
    stats.evaluations = prob.evaluations;
    stats.projected_gradient = pg;
    stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sol.stats = stats;
    return sol;
}

}  // namespace fcev::mpc
