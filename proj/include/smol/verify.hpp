#pragma once

// Cross-validation of the integrator, equilibrium solver and rate fit against
// the closed-form monomer-only model.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "smol/analytic.hpp"
#include "smol/equilibrium.hpp"
#include "smol/integrator.hpp"
#include "smol/system.hpp"

namespace smol {

struct CheckResult {
    std::string name;
    bool pass = false;
    double value = 0.0;     ///< observed quantity
    double threshold = 0.0; ///< limit it is compared against
    std::string detail;
};

struct ExampleCheckOptions {
    std::size_t N = 16;
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
    std::vector<double> oracle_times{0.5, 1.0, 2.0, 5.0, 10.0};
    double oracle_rel = 1e-6;
    double riccati_tol = 1e-10;
    double equilibrium_tol = 1e-9;
    double residual_tol = 1e-10;
    double fit_lo = 2.0;
    double fit_hi = 10.0;
    double rate_fraction = 0.95;
    double min_r_squared = 0.99;
    double mass_identity_rel = 1e-10;
};

namespace detail {

// Relative error with an absolute floor so that exactly-zero components compare
// on an absolute scale far below any concentration of interest.
inline double relative_error(double got, double want, double floor = 1e-14)
{
    return std::abs(got - want) / std::max(std::abs(want), floor);
}

} // namespace detail

inline std::vector<CheckResult> verify_example(const ExampleParams& p, const ExampleCheckOptions& opt = {})
{
    p.validate();
    std::vector<CheckResult> out;
    const std::size_t n = std::max<std::size_t>(opt.N, 3);
    const CoagulationSystem sys = p.system(n);

    // The oracle comparison runs on a trajectory sampled only at the oracle times
    // so that the step size is governed by the tolerances alone.
    std::set<double> oracle(opt.oracle_times.begin(), opt.oracle_times.end());
    const double t_end = std::max(opt.fit_hi, oracle.empty() ? 0.0 : *oracle.rbegin());
    IntegratorConfig cfg;
    cfg.rel_tol = opt.rel_tol;
    cfg.abs_tol = opt.abs_tol;
    cfg.t_end = t_end;
    cfg.sample_times.assign(oracle.begin(), oracle.end());

    Trajectory coarse, traj;
    try {
        coarse = integrate(sys, p.initial_state(n), cfg);
        cfg.sample_times = linspace(0.0, t_end, 201);
        traj = integrate(sys, p.initial_state(n), cfg);
    } catch (const Error& e) {
        out.push_back({"integration", false, 0.0, 0.0, e.what()});
        return out;
    }
    auto sample_at = [&](double t) -> const StateVector& {
        auto it = std::find_if(coarse.samples.begin(), coarse.samples.end(),
                               [t](const StateVector& s) { return s.t == t; });
        return *it;
    };

    // component-wise agreement with the closed form
    double e1 = 0.0, e2 = 0.0, ek = 0.0;
    for (double t : opt.oracle_times) {
        const StateVector& s = sample_at(t);
        e1 = std::max(e1, detail::relative_error(s[1], exact_c1(p, t)));
        e2 = std::max(e2, detail::relative_error(s[2], exact_c2(p, t)));
        for (std::size_t k = 3; k <= n; ++k) {
            ek = std::max(ek, detail::relative_error(s[k], exact_ck(p, k, t)));
        }
    }
    out.push_back({"c1 vs closed form", e1 <= opt.oracle_rel, e1, opt.oracle_rel, "max relative error"});
    out.push_back({"c2 vs closed form", e2 <= opt.oracle_rel, e2, opt.oracle_rel, "max relative error"});
    out.push_back({"ck (k>=3) vs closed form", ek <= opt.oracle_rel, ek, opt.oracle_rel, "max relative error"});

    // closed-form c1 against a tight scalar integration of its own equation
    {
        const double r1 = p.removal(1);
        const double s1 = p.source(1);
        IntegratorConfig sc;
        sc.rel_tol = 1e-13;
        sc.abs_tol = 1e-16;
        sc.t_end = t_end;
        sc.sample_times = linspace(0.0, t_end, 41);
        auto scalar = integrate_ode(
            [&](double, std::span<const double> y, std::span<double> f) {
                f[0] = -p.A_star * y[0] * y[0] + s1 - r1 * y[0];
            },
            std::vector<double>{p.initial(1)}, 0.0, sc, false);
        double worst = 0.0;
        for (const auto& s : scalar.samples) {
            worst = std::max(worst, std::abs(s[1] - exact_c1(p, s.t)));
        }
        out.push_back({"c1 closed form vs scalar ODE", worst <= opt.riccati_tol, worst, opt.riccati_tol,
                       "max absolute difference"});
    }

    // equilibrium
    const auto exact_q = exact_equilibrium(p, n);
    StateVector Q(exact_q, 0.0);
    try {
        EquilibriumOptions eo;
        eo.tol = opt.residual_tol;
        const auto eq = solve_equilibrium(sys, eo);
        double worst = 0.0;
        for (std::size_t k = 1; k <= n; ++k) {
            worst = std::max(worst, std::abs(eq.Q[k] - exact_q[k - 1]));
        }
        out.push_back({"equilibrium vs closed form", worst <= opt.equilibrium_tol, worst, opt.equilibrium_tol,
                       "max absolute difference"});
        out.push_back({"equilibrium residual", eq.residual <= opt.residual_tol, eq.residual, opt.residual_tol,
                       std::string("method ") + to_string(eq.method)});
    } catch (const Error& e) {
        out.push_back({"equilibrium vs closed form", false, 0.0, opt.equilibrium_tol, e.what()});
    }

    // exponential decay toward the equilibrium
    {
        const double rate = example_decay_rate(p);
        const double want = opt.rate_fraction * rate;
        try {
            const auto rep = convergence_analysis(traj, Q, 1.0, opt.fit_lo, opt.fit_hi);
            const bool ok = rep.fitted_rate >= want && rep.r_squared >= opt.min_r_squared;
            std::ostringstream os;
            os << "R^2=" << rep.r_squared << ", predicted rate " << rate;
            out.push_back({"decay rate", ok, rep.fitted_rate, want, os.str()});
        } catch (const InsufficientDataError& e) {
            double biggest = 0.0;
            for (const auto& s : traj.samples) {
                biggest = std::max(biggest, pairwise_distance(s, Q, 1.0));
            }
            const bool trivial = biggest == 0.0;
            out.push_back({"decay rate", trivial, 0.0, want,
                           trivial ? "trajectory sits at the equilibrium" : std::string(e.what())});
        }
    }

    // first-moment balance of the right-hand side at every sample
    {
        std::vector<double> phi(n);
        for (std::size_t k = 1; k <= n; ++k) {
            phi[k - 1] = static_cast<double>(k);
        }
        double worst = 0.0;
        for (const auto& s : traj.samples) {
            worst = std::max(worst, weak_form_residual(sys, s, phi).relative());
        }
        out.push_back({"first-moment weak form", worst <= opt.mass_identity_rel, worst, opt.mass_identity_rel,
                       "max relative residual"});
    }
    return out;
}

} // namespace smol
