#pragma once

// Closed-form solution of the monomer-only model
//
//   a(1,1) = A*, a(k,l) = 0 otherwise,   r_k = R* k^gamma,   s_k >= 0,
//
// in which c_1 solves a scalar Riccati equation, c_2 is driven linearly by c_1^2
// and every c_k with k >= 3 relaxes independently.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "smol/contraction.hpp"
#include "smol/error.hpp"
#include "smol/kernels.hpp"
#include "smol/state.hpp"
#include "smol/system.hpp"

namespace smol {

struct ExampleParams {
    double A_star = 1.0;
    double R_star = 1.0;
    double gamma = 1.0;
    std::vector<double> s;    ///< s[k-1] = s_k; missing entries are zero
    std::vector<double> c_in; ///< c_in[k-1] = initial c_k; missing entries are zero

    /// A* = 1, r_k = k, s = (1, 1/2, 0, ...), zero initial data.
    static ExampleParams standard() { return {1.0, 1.0, 1.0, {1.0, 0.5}, {}}; }

    double removal(std::size_t k) const { return R_star * std::pow(static_cast<double>(k), gamma); }
    double source(std::size_t k) const { return k <= s.size() ? s[k - 1] : 0.0; }
    double initial(std::size_t k) const { return k <= c_in.size() ? c_in[k - 1] : 0.0; }

    void validate() const
    {
        if (!(A_star >= 0.0) || !(R_star > 0.0) || !(gamma > 0.0)) {
            throw ParameterError("example needs A* >= 0, R* > 0 and gamma > 0");
        }
        for (double v : s) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ParameterError("example source rates must be finite and nonnegative");
            }
        }
        for (double v : c_in) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                throw ParameterError("example initial data must be finite and nonnegative");
            }
        }
    }

    KernelModel kernel() const { return KernelModel::constant_monomer(A_star); }
    RateModel removal_model() const { return RateModel::power_law(R_star, gamma); }

    SourceModel source_model() const
    {
        std::vector<std::pair<std::size_t, double>> entries;
        for (std::size_t k = 1; k <= s.size(); ++k) {
            entries.emplace_back(k, s[k - 1]);
        }
        return SourceModel::finite_support(entries);
    }

    CoagulationSystem system(std::size_t n) const
    {
        validate();
        return CoagulationSystem(kernel(), removal_model(), source_model(), n);
    }

    StateVector initial_state(std::size_t n) const
    {
        StateVector st(n, 0.0);
        for (std::size_t k = 1; k <= std::min(n, c_in.size()); ++k) {
            st[k] = c_in[k - 1];
        }
        return st;
    }
};

/// Roots of -A* Q^2 - r_1 Q + s_1 = 0 and alpha_ric = 1/(Q1_plus - Q1_minus).
struct RiccatiConstants {
    double Q1_plus = 0.0;
    double Q1_minus = 0.0;
    double alpha_ric = 0.0;
};

namespace detail {

inline double riccati_discriminant_root(const ExampleParams& p)
{
    const double r1 = p.removal(1);
    return std::sqrt(r1 * r1 + 4.0 * p.A_star * p.source(1));
}

inline double stable_q1(const ExampleParams& p)
{
    const double r1 = p.removal(1);
    const double s1 = p.source(1);
    if (s1 == 0.0) {
        return 0.0;
    }
    // 2 s1 / (r1 + sqrt(r1^2 + 4 A s1)) avoids cancellation when A s1 << r1^2
    return 2.0 * s1 / (r1 + riccati_discriminant_root(p));
}

} // namespace detail

inline RiccatiConstants riccati_constants(const ExampleParams& p)
{
    p.validate();
    if (!(p.A_star > 0.0)) {
        throw ParameterError("Riccati constants need A* > 0");
    }
    const double lambda = detail::riccati_discriminant_root(p);
    RiccatiConstants rc;
    rc.Q1_plus = detail::stable_q1(p);
    rc.Q1_minus = -(p.removal(1) + lambda) / (2.0 * p.A_star);
    rc.alpha_ric = p.A_star / lambda;
    return rc;
}

/// Exact stationary state on sizes 1..n.
inline std::vector<double> exact_equilibrium(const ExampleParams& p, std::size_t n)
{
    p.validate();
    std::vector<double> q(n, 0.0);
    if (n == 0) {
        return q;
    }
    const double q1 = detail::stable_q1(p);
    q[0] = q1;
    if (n >= 2) {
        const double r2 = p.removal(2);
        q[1] = p.A_star / (2.0 * r2) * q1 * q1 + p.source(2) / r2;
    }
    for (std::size_t k = 3; k <= n; ++k) {
        q[k - 1] = p.source(k) / p.removal(k);
    }
    return q;
}

inline double exact_c1(const ExampleParams& p, double t)
{
    p.validate();
    if (!(t >= 0.0)) {
        throw DomainError("exact_c1 needs t >= 0");
    }
    const double c0 = p.initial(1);
    const double lambda = detail::riccati_discriminant_root(p);
    const double q1 = detail::stable_q1(p);
    const double u0 = c0 - q1;
    // u = c1 - Q1 solves u' = -A u^2 - lambda u
    const double decay = std::exp(-lambda * t);
    const double phi = lambda > 0.0 ? -std::expm1(-lambda * t) / lambda : t; // (1 - e^{-lambda t}) / lambda
    return q1 + u0 * decay / (1.0 + p.A_star * u0 * phi);
}

inline double exact_ck(const ExampleParams& p, std::size_t k, double t)
{
    p.validate();
    if (k < 3) {
        throw IndexError("exact_ck covers sizes k >= 3");
    }
    if (!(t >= 0.0)) {
        throw DomainError("exact_ck needs t >= 0");
    }
    const double rk = p.removal(k);
    return p.initial(k) * std::exp(-rk * t) + p.source(k) / rk * (-std::expm1(-rk * t));
}

/// c_2 from its variation-of-constants formula, the c_1^2 forcing integrated by
/// adaptive Gauss-Kronrod quadrature.
inline double exact_c2(const ExampleParams& p, double t, double quadrature_tol = 1e-12)
{
    p.validate();
    if (!(t >= 0.0)) {
        throw DomainError("exact_c2 needs t >= 0");
    }
    if (!(quadrature_tol > 0.0)) {
        throw ParameterError("quadrature tolerance must be positive");
    }
    const double r2 = p.removal(2);
    const double linear = p.initial(2) * std::exp(-r2 * t) + p.source(2) / r2 * (-std::expm1(-r2 * t));
    if (p.A_star == 0.0 || t == 0.0) {
        return linear;
    }
    auto integrand = [&](double s) {
        const double c1 = exact_c1(p, s);
        return 0.5 * p.A_star * c1 * c1 * std::exp(-r2 * (t - s));
    };
    double err = 0.0;
    double l1 = 0.0;
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 30, quadrature_tol, &err, &l1);
    if (!std::isfinite(integral) || (err > quadrature_tol * l1 && err > 1e-16)) {
        std::ostringstream os;
        os << "quadrature for c_2 did not reach tolerance " << quadrature_tol << " (error estimate " << err << ")";
        throw ToleranceError(os.str());
    }
    return linear + integral;
}

/// All components 1..n of the exact solution at time t.
inline StateVector exact_state(const ExampleParams& p, std::size_t n, double t, double quadrature_tol = 1e-12)
{
    StateVector st(n, t);
    if (n >= 1) {
        st[1] = exact_c1(p, t);
    }
    if (n >= 2) {
        st[2] = exact_c2(p, t, quadrature_tol);
    }
    for (std::size_t k = 3; k <= n; ++k) {
        st[k] = exact_ck(p, k, t);
    }
    return st;
}

/// min{A*/(2 alpha_ric), r_2/2, 3^gamma R*/2}; A*/alpha_ric = sqrt(r_1^2 + 4 A* s_1).
inline double example_decay_rate(const ExampleParams& p)
{
    p.validate();
    const double lambda = detail::riccati_discriminant_root(p);
    return std::min({0.5 * lambda, 0.5 * p.removal(2), 0.5 * std::pow(3.0, p.gamma) * p.R_star});
}

struct GapDemo {
    double C_mu = 0.0;
    double bracket_lower = 0.0;       ///< (3(C_mu+2) - 1) R*
    double bracket_lower_exact = 0.0; ///< 2 (C_mu+2) A* Q_1 - R*
    double decay_rate = 0.0;
};

/// With A* s_1 >= 4 R*^2 the contraction bracket evaluated along any pair of
/// solutions is bounded below by a positive constant, yet the explicit solution
/// still converges at example_decay_rate.
inline GapDemo smallness_gap_demo(const ExampleParams& p, double mu)
{
    p.validate();
    if (!(p.A_star * p.source(1) >= 4.0 * p.R_star * p.R_star)) {
        throw ParameterError("gap demonstration needs A* s_1 >= 4 R*^2");
    }
    GapDemo g;
    g.C_mu = c_mu(mu);
    g.bracket_lower = (3.0 * (g.C_mu + 2.0) - 1.0) * p.R_star;
    g.bracket_lower_exact = 2.0 * (g.C_mu + 2.0) * p.A_star * detail::stable_q1(p) - p.R_star;
    g.decay_rate = example_decay_rate(p);
    return g;
}

} // namespace smol
