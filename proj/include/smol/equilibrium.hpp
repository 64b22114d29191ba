#pragma once

// Stationary states of the truncated system and decay of trajectories toward them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "smol/contraction.hpp"
#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/moments.hpp"
#include "smol/state.hpp"
#include "smol/system.hpp"

namespace smol {

/// Max-norm of the stationary right-hand side at q.
inline double stationary_residual(const CoagulationSystem& sys, std::span<const double> q)
{
    std::vector<double> f(sys.size());
    sys.rhs(q, f);
    double r = 0.0;
    for (double v : f) {
        r = std::max(r, std::abs(v));
    }
    return r;
}

/// One ascending Gauss-Seidel sweep
///   Q_k <- (1-w) Q_k + w (gain_k + s_k) / (r_k + loss_k),
/// where gain_k only involves sizes below k and therefore already-updated values.
inline StateVector fixed_point_sweep(const CoagulationSystem& sys, const StateVector& q, double damping)
{
    if (!(damping > 0.0 && damping <= 1.0)) {
        throw ParameterError("sweep damping must lie in (0, 1]");
    }
    if (q.size() != sys.size()) {
        throw DimensionError("sweep state length differs from truncation size N");
    }
    q.validate();
    const std::size_t n = sys.size();
    StateVector out = q;
    auto& c = out.c;
    for (std::size_t k = 1; k <= n; ++k) {
        double gain = 0.0;
        for (std::size_t l = 1; l < k; ++l) {
            gain += sys.kernel(k - l, l) * c[k - l - 1] * c[l - 1];
        }
        gain *= 0.5;
        double loss = 0.0;
        for (std::size_t l = 1; l + k <= n; ++l) {
            loss += sys.kernel(k, l) * c[l - 1];
        }
        const double num = gain + sys.source(k);
        const double den = sys.removal(k) + loss;
        double target;
        if (den > 0.0) {
            target = num / den;
        } else if (num == 0.0) {
            target = 0.0;
        } else {
            std::ostringstream os;
            os << "no stationary state: size " << k << " is fed but has neither removal nor loss";
            throw ParameterError(os.str());
        }
        c[k - 1] = (1.0 - damping) * c[k - 1] + damping * target;
    }
    return out;
}

enum class EquilibriumMethod { sweep, long_time_integration };

inline const char* to_string(EquilibriumMethod m)
{
    return m == EquilibriumMethod::sweep ? "sweep" : "long-time-integration";
}

struct EquilibriumOptions {
    double tol = 1e-10;          ///< absolute per-component stationary residual
    std::size_t max_iter = 20000;
    double damping = 0.8;
    bool allow_fallback = true;
};

struct EquilibriumResult {
    StateVector Q;
    double residual = 0.0;
    std::size_t iterations = 0;
    EquilibriumMethod method = EquilibriumMethod::sweep;
    std::vector<double> residual_history;
};

namespace detail {

// Sweeps until the residual drops below tol; returns true on success.
inline bool sweep_until(const CoagulationSystem& sys, StateVector& q, const EquilibriumOptions& opt,
                        EquilibriumResult& res)
{
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        q = fixed_point_sweep(sys, q, opt.damping);
        ++res.iterations;
        const double r = stationary_residual(sys, q.c);
        res.residual_history.push_back(r);
        if (!std::isfinite(r)) {
            return false;
        }
        if (r <= opt.tol) {
            res.residual = r;
            return true;
        }
    }
    res.residual = res.residual_history.empty() ? std::numeric_limits<double>::infinity()
                                                : res.residual_history.back();
    return false;
}

} // namespace detail

/// Damped sweep from guess; falls back to integrating from zero up to t = 50/R*
/// and polishing with further sweeps.
inline EquilibriumResult solve_equilibrium(const CoagulationSystem& sys, const StateVector& guess,
                                           const EquilibriumOptions& opt = {})
{
    if (!(opt.tol > 0.0)) {
        throw ParameterError("equilibrium tolerance must be positive");
    }
    if (guess.size() != sys.size()) {
        throw DimensionError("initial guess length differs from truncation size N");
    }
    EquilibriumResult res;
    res.Q = StateVector(sys.size(), 0.0);
    if (sys.source_model().is_zero() ||
        std::all_of(sys.source_rates().begin(), sys.source_rates().end(), [](double s) { return s == 0.0; })) {
        if (stationary_residual(sys, res.Q.c) == 0.0) {
            return res;
        }
    }

    StateVector q = guess;
    q.t = 0.0;
    if (detail::sweep_until(sys, q, opt, res)) {
        res.Q = std::move(q);
        res.method = EquilibriumMethod::sweep;
        return res;
    }
    if (opt.allow_fallback && sys.removal_model().R_star() > 0.0) {
        IntegratorConfig cfg;
        cfg.t_end = 50.0 / sys.removal_model().R_star();
        try {
            auto traj = integrate(sys, StateVector(sys.size(), 0.0), cfg);
            StateVector p = traj.back();
            p.t = 0.0;
            res.residual_history.push_back(stationary_residual(sys, p.c));
            if (detail::sweep_until(sys, p, opt, res)) {
                res.Q = std::move(p);
                res.method = EquilibriumMethod::long_time_integration;
                return res;
            }
        } catch (const StiffnessError&) {
            // fall through to the convergence failure below
        }
    }
    std::ostringstream os;
    os << "equilibrium solve did not reach residual " << opt.tol << " after " << res.iterations
       << " sweeps (last residual " << res.residual << ")";
    throw ConvergenceError(os.str(), res.residual_history);
}

inline EquilibriumResult solve_equilibrium(const CoagulationSystem& sys, const EquilibriumOptions& opt = {})
{
    return solve_equilibrium(sys, StateVector(sys.size(), 0.0), opt);
}

inline EquilibriumResult solve_equilibrium(const KernelModel& kernel, const RateModel& removal,
                                           const SourceModel& source, std::size_t n, double tol = 1e-10,
                                           std::size_t max_iter = 20000)
{
    EquilibriumOptions opt;
    opt.tol = tol;
    opt.max_iter = max_iter;
    return solve_equilibrium(CoagulationSystem(kernel, removal, source, n), opt);
}

struct ConvergenceReport {
    std::vector<double> times;
    std::vector<double> distances;
    double fitted_rate = 0.0; ///< positive means decay
    double intercept = 0.0;   ///< log of the fitted prefactor
    double r_squared = 0.0;
    double fit_rms = 0.0;     ///< rms residual of the log-linear fit
    std::size_t points_used = 0;
    std::optional<double> theoretical_kappa;
    double t_lo = 0.0;
    double t_hi = 0.0;
};

namespace detail {

inline ConvergenceReport fit_decay(std::vector<double> times, std::vector<double> dist, std::size_t first,
                                   double t_lo, double t_hi, double scale)
{
    ConvergenceReport rep;
    rep.times = std::move(times);
    rep.distances = std::move(dist);
    const double floor = 100.0 * std::numeric_limits<double>::epsilon() * scale;
    std::vector<double> x, y;
    for (std::size_t i = first; i < rep.times.size(); ++i) {
        const double t = rep.times[i];
        if (t < t_lo || t > t_hi) {
            continue;
        }
        if (rep.distances[i] > floor && rep.distances[i] > 0.0) {
            x.push_back(t);
            y.push_back(std::log(rep.distances[i]));
        }
    }
    if (x.size() < 4) {
        std::ostringstream os;
        os << "decay fit needs at least 4 points above roundoff, found " << x.size();
        throw InsufficientDataError(os.str());
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw InsufficientDataError("decay fit needs distinct sample times");
    }
    const double slope = sxy / sxx;
    rep.fitted_rate = -slope;
    rep.intercept = my - slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (rep.intercept + slope * x[i]);
        ss_res += e * e;
    }
    rep.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    rep.fit_rms = std::sqrt(ss_res / n);
    rep.points_used = x.size();
    rep.t_lo = x.front();
    rep.t_hi = x.back();
    return rep;
}

inline void distances_to(const Trajectory& traj, const StateVector& q, double mu, std::vector<double>& times,
                         std::vector<double>& dist)
{
    for (const auto& s : traj.samples) {
        require_same_size(s, q);
        times.push_back(s.t);
        dist.push_back(pairwise_distance(s, q, mu));
    }
}

} // namespace detail

/// Least-squares fit of log distance(c(t), Q) over the last tail_fraction of the samples.
inline ConvergenceReport convergence_analysis(const Trajectory& traj, const StateVector& q, double mu,
                                              double tail_fraction)
{
    if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
        throw ParameterError("tail_fraction must lie in (0, 1)");
    }
    std::vector<double> times, dist;
    detail::distances_to(traj, q, mu, times, dist);
    const auto n = times.size();
    const auto first =
        static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(n)));
    const double scale = std::max(moment(q, mu), dist.empty() ? 0.0 : *std::max_element(dist.begin(), dist.end()));
    const double inf = std::numeric_limits<double>::infinity();
    return detail::fit_decay(std::move(times), std::move(dist), first, -inf, inf, scale);
}

/// Same fit restricted to samples with t_lo <= t <= t_hi.
inline ConvergenceReport convergence_analysis(const Trajectory& traj, const StateVector& q, double mu, double t_lo,
                                              double t_hi)
{
    if (!(t_hi > t_lo)) {
        throw ParameterError("fit window needs t_hi > t_lo");
    }
    std::vector<double> times, dist;
    detail::distances_to(traj, q, mu, times, dist);
    const double scale = std::max(moment(q, mu), dist.empty() ? 0.0 : *std::max_element(dist.begin(), dist.end()));
    return detail::fit_decay(std::move(times), std::move(dist), 0, t_lo, t_hi, scale);
}

/// sum_k k^mu |rhs_k(c(t))| at every sample.
inline std::vector<std::pair<double, double>> stationarity_drift(const CoagulationSystem& sys,
                                                                 const Trajectory& traj, double mu)
{
    if (traj.samples.size() < 2) {
        throw InsufficientDataError("stationarity drift needs at least 2 samples");
    }
    std::vector<std::pair<double, double>> out;
    std::vector<double> f(sys.size());
    for (const auto& s : traj.samples) {
        sys.rhs(s.c, f);
        CompensatedSum acc;
        for (std::size_t k = 1; k <= f.size(); ++k) {
            acc += std::pow(static_cast<double>(k), mu) * std::abs(f[k - 1]);
        }
        out.emplace_back(s.t, acc.value());
    }
    return out;
}

} // namespace smol
