#pragma once

// Dormand–Prince 5(4) with FSAL, PI step-size control and positivity projection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <vector>

#include "smol/error.hpp"
#include "smol/state.hpp"
#include "smol/system.hpp"

namespace smol {

struct IntegratorConfig {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double negativity_floor = 1e-14;
    double t_end = 1.0;
    std::vector<double> sample_times; ///< empty means {t_end}
    std::size_t max_steps = 20'000'000;

    void validate(double t0 = 0.0) const
    {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) {
            throw ParameterError("integrator tolerances must be positive");
        }
        if (!(max_step > 0.0)) {
            throw ParameterError("max_step must be positive");
        }
        if (!(negativity_floor > 0.0)) {
            throw ParameterError("negativity_floor must be positive");
        }
        if (!(t_end > 0.0) || !std::isfinite(t_end) || t_end < t0) {
            throw ParameterError("t_end must be positive, finite and not before the initial time");
        }
        for (std::size_t i = 0; i < sample_times.size(); ++i) {
            const double s = sample_times[i];
            if (!(s >= t0 && s <= t_end)) {
                std::ostringstream os;
                os << "sample time " << s << " outside [" << t0 << ", " << t_end << "]";
                throw ParameterError(os.str());
            }
            if (i > 0 && !(s > sample_times[i - 1])) {
                throw ParameterError("sample times must be strictly increasing");
            }
        }
    }
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t negativity_rejections = 0;
    std::size_t rhs_evaluations = 0;
};

struct Trajectory {
    std::vector<StateVector> samples;
    StepStats stats;

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    const StateVector& back() const { return samples.back(); }

    std::vector<double> times() const
    {
        std::vector<double> t;
        t.reserve(samples.size());
        for (const auto& s : samples) {
            t.push_back(s.t);
        }
        return t;
    }
};

/// Evenly spaced sample grid t0, t0+dt, ..., t_end (count points, count >= 2).
inline std::vector<double> linspace(double t0, double t1, std::size_t count)
{
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = (i + 1 == count) ? t1 : t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return out;
}

namespace detail {

struct DormandPrince {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    // fifth-order minus embedded fourth-order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
};

} // namespace detail

/// Integrates y' = f(t, y) from (t0, y0) and records y at cfg.sample_times.
/// f has signature void(double t, std::span<const double> y, std::span<double> dydt).
/// With nonnegative = true, components in (-floor, 0) are projected to zero after each
/// accepted step and any component <= -floor rejects the step and halves h.
template <class Rhs>
Trajectory integrate_ode(Rhs&& f, std::vector<double> y0, double t0, const IntegratorConfig& cfg,
                         bool nonnegative = true)
{
    using DP = detail::DormandPrince;
    cfg.validate(t0);
    const std::size_t n = y0.size();
    std::vector<double> samples = cfg.sample_times;
    if (samples.empty()) {
        samples.push_back(cfg.t_end);
    }

    Trajectory traj;
    traj.samples.reserve(samples.size());
    std::size_t next = 0;
    while (next < samples.size() && samples[next] <= t0) {
        traj.samples.emplace_back(y0, t0);
        ++next;
    }
    if (next == samples.size()) {
        return traj;
    }

    std::vector<double> y = std::move(y0), ynew(n), ytmp(n), err(n);
    std::array<std::vector<double>, 7> k;
    for (auto& v : k) {
        v.resize(n);
    }
    StepStats& st = traj.stats;
    auto eval = [&](double t, std::span<const double> in, std::span<double> out) {
        f(t, in, out);
        ++st.rhs_evaluations;
    };

    auto scaled_norm = [&](std::span<const double> v, std::span<const double> ref) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = cfg.abs_tol + cfg.rel_tol * std::abs(ref[i]);
            acc += (v[i] / sc) * (v[i] / sc);
        }
        return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
    };

    double t = t0;
    eval(t, y, k[0]);

    // initial step guess (Hairer, Nørsett & Wanner II.4)
    double h;
    {
        const double d0 = scaled_norm(y, y);
        const double d1 = scaled_norm(k[0], y);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, cfg.max_step);
        for (std::size_t i = 0; i < n; ++i) {
            ytmp[i] = y[i] + h0 * k[0][i];
        }
        eval(t + h0, ytmp, k[1]);
        for (std::size_t i = 0; i < n; ++i) {
            err[i] = k[1][i] - k[0][i];
        }
        const double d2 = scaled_norm(err, y) / h0;
        const double dm = std::max(d1, d2);
        const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
        h = std::min({100.0 * h0, h1, cfg.max_step});
    }

    const double h_min = 1e-14 * std::max(cfg.t_end, 1e-300);
    constexpr double safety = 0.9;
    constexpr double alpha_pi = 0.7 / 5.0;
    constexpr double beta_pi = 0.4 / 5.0;
    double err_prev = 1e-4;
    bool last_rejected = false;
    std::size_t stiffest = 0;

    while (next < samples.size()) {
        if (st.accepted + st.rejected >= cfg.max_steps) {
            std::ostringstream os;
            os << "step budget of " << cfg.max_steps << " exhausted at t=" << t;
            throw StiffnessError(os.str(), t, stiffest + 1);
        }
        const double target = samples[next];
        double h_step = std::min(h, target - t);
        bool hits_target = false;
        if (t + h_step >= target || target - (t + h_step) < 1e-12 * std::max(1.0, std::abs(target))) {
            h_step = target - t;
            hits_target = true;
        }
        if (h_step < h_min) {
            std::ostringstream os;
            os << "step size " << h_step << " underflowed at t=" << t << " (stiffest component k=" << stiffest + 1
               << ")";
            throw StiffnessError(os.str(), t, stiffest + 1);
        }

        auto stage = [&](std::vector<double>& out, auto&& combine) {
            for (std::size_t i = 0; i < n; ++i) {
                ytmp[i] = y[i] + h_step * combine(i);
            }
            (void)out;
        };
        stage(k[1], [&](std::size_t i) { return DP::a21 * k[0][i]; });
        eval(t + DP::c2 * h_step, ytmp, k[1]);
        stage(k[2], [&](std::size_t i) { return DP::a31 * k[0][i] + DP::a32 * k[1][i]; });
        eval(t + DP::c3 * h_step, ytmp, k[2]);
        stage(k[3], [&](std::size_t i) { return DP::a41 * k[0][i] + DP::a42 * k[1][i] + DP::a43 * k[2][i]; });
        eval(t + DP::c4 * h_step, ytmp, k[3]);
        stage(k[4], [&](std::size_t i) {
            return DP::a51 * k[0][i] + DP::a52 * k[1][i] + DP::a53 * k[2][i] + DP::a54 * k[3][i];
        });
        eval(t + DP::c5 * h_step, ytmp, k[4]);
        stage(k[5], [&](std::size_t i) {
            return DP::a61 * k[0][i] + DP::a62 * k[1][i] + DP::a63 * k[2][i] + DP::a64 * k[3][i] +
                   DP::a65 * k[4][i];
        });
        eval(t + h_step, ytmp, k[5]);
        for (std::size_t i = 0; i < n; ++i) {
            ynew[i] = y[i] + h_step * (DP::a71 * k[0][i] + DP::a73 * k[2][i] + DP::a74 * k[3][i] +
                                       DP::a75 * k[4][i] + DP::a76 * k[5][i]);
        }
        eval(t + h_step, ynew, k[6]);

        double acc = 0.0;
        double worst = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = h_step * (DP::e1 * k[0][i] + DP::e3 * k[2][i] + DP::e4 * k[3][i] +
                                       DP::e5 * k[4][i] + DP::e6 * k[5][i] + DP::e7 * k[6][i]);
            const double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double r = (e / sc) * (e / sc);
            acc += r;
            if (r > worst) {
                worst = r;
                stiffest = i;
            }
        }
        const double err_norm = n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;

        if (!(err_norm <= 1.0)) {
            ++st.rejected;
            const double fac = std::isfinite(err_norm) ? std::max(0.2, safety * std::pow(err_norm, -0.2)) : 0.2;
            h = h_step * fac;
            last_rejected = true;
            continue;
        }

        bool negative = false;
        bool projected = false;
        if (nonnegative) {
            for (std::size_t i = 0; i < n; ++i) {
                if (ynew[i] <= -cfg.negativity_floor) {
                    negative = true;
                    stiffest = i;
                    break;
                }
                if (ynew[i] < 0.0) {
                    ynew[i] = 0.0;
                    projected = true;
                }
            }
        }
        if (negative) {
            ++st.rejected;
            ++st.negativity_rejections;
            h = 0.5 * h_step;
            last_rejected = true;
            continue;
        }

        ++st.accepted;
        t = hits_target ? target : t + h_step;
        y.swap(ynew);
        if (projected) {
            eval(t, y, k[0]);
        } else {
            k[0].swap(k[6]);
        }

        double fac = safety * std::pow(std::max(err_norm, 1e-10), -alpha_pi) * std::pow(err_prev, beta_pi);
        fac = std::clamp(fac, 0.2, 5.0);
        if (last_rejected) {
            fac = std::min(fac, 1.0);
        }
        err_prev = std::max(err_norm, 1e-4);
        last_rejected = false;
        h = std::min(h_step * fac, cfg.max_step);
        if (hits_target) {
            // truncated steps should not shrink the controller's proposal
            h = std::max(h, std::min(h_step, cfg.max_step));
        }

        while (next < samples.size() && samples[next] <= t) {
            traj.samples.emplace_back(y, t);
            ++next;
        }
    }
    return traj;
}

/// Integrates the truncated coagulation system from initial.
inline Trajectory integrate(const CoagulationSystem& sys, const StateVector& initial, const IntegratorConfig& cfg)
{
    if (initial.size() != sys.size()) {
        throw DimensionError("initial state length differs from truncation size N");
    }
    initial.validate();
    return integrate_ode([&sys](double, std::span<const double> y, std::span<double> out) { sys.rhs(y, out); },
                         initial.c, initial.t, cfg, true);
}

inline Trajectory integrate(const KernelModel& kernel, const RateModel& removal, const SourceModel& source,
                            const StateVector& initial, const IntegratorConfig& cfg)
{
    return integrate(CoagulationSystem(kernel, removal, source, initial.size()), initial, cfg);
}

} // namespace smol
