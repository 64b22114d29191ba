#pragma once

// Weighted l^1 contraction between two solutions and the smallness constants
// guaranteeing a unique, exponentially attracting equilibrium.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "smol/error.hpp"
#include "smol/kernels.hpp"
#include "smol/moments.hpp"
#include "smol/state.hpp"

namespace smol {

/// 2^{max(mu-2,0)} max(mu, mu(mu-1)).
inline double c_mu(double mu)
{
    if (!(mu >= 1.0)) {
        throw ParameterError("c_mu needs mu >= 1");
    }
    return std::pow(2.0, std::max(mu - 2.0, 0.0)) * std::max(mu, mu * (mu - 1.0));
}

struct TechnicalCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// (k+l)^mu - k^mu + l^mu  <=  C_mu l^{max(1,mu-1)} k^{mu-1} + 2 l^mu.
inline TechnicalCheck technical_inequality_check(std::size_t k, std::size_t l, double mu)
{
    if (k == 0 || l == 0) {
        throw IndexError("cluster sizes start at 1");
    }
    const double kd = static_cast<double>(k);
    const double ld = static_cast<double>(l);
    TechnicalCheck out;
    out.lhs = std::pow(kd + ld, mu) - std::pow(kd, mu) + std::pow(ld, mu);
    out.rhs = c_mu(mu) * std::pow(ld, std::max(1.0, mu - 1.0)) * std::pow(kd, mu - 1.0) + 2.0 * std::pow(ld, mu);
    out.holds = out.lhs <= out.rhs * (1.0 + 1e-12);
    return out;
}

/// sum_k k^mu |c_k - d_k|.
inline double pairwise_distance(std::span<const double> c, std::span<const double> d, double mu)
{
    if (c.size() != d.size()) {
        std::ostringstream os;
        os << "state dimensions differ: " << c.size() << " vs " << d.size();
        throw DimensionError(os.str());
    }
    CompensatedSum acc;
    for (std::size_t k = 1; k <= c.size(); ++k) {
        const double diff = std::abs(c[k - 1] - d[k - 1]);
        if (diff != 0.0) {
            acc += std::pow(static_cast<double>(k), mu) * diff;
        }
    }
    return acc.value();
}

inline double pairwise_distance(const StateVector& c, const StateVector& d, double mu)
{
    return pairwise_distance(c.values(), d.values(), mu);
}

/// 2 A* (C_mu + 2) sum_l l^{mu+beta} (c_l + d_l) - R*.  A negative value means the
/// weighted distance between c and d is decaying at that instant.
inline double contraction_rate(const Envelope& env, double R_star, double mu, std::span<const double> c,
                               std::span<const double> d)
{
    if (c.size() != d.size()) {
        throw DimensionError("contraction rate needs states of equal length");
    }
    CompensatedSum acc;
    for (std::size_t l = 1; l <= c.size(); ++l) {
        const double w = c[l - 1] + d[l - 1];
        if (w != 0.0) {
            acc += std::pow(static_cast<double>(l), mu + env.beta) * w;
        }
    }
    return 2.0 * env.A_star * (c_mu(mu) + 2.0) * acc.value() - R_star;
}

inline double contraction_rate(const Envelope& env, double R_star, double mu, const StateVector& c,
                               const StateVector& d)
{
    return contraction_rate(env, R_star, mu, c.values(), d.values());
}

struct SmallnessInputs {
    double mu = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 1.0;
    double A_star = 1.0;
    double R_star = 1.0;
    double s1_hat = 0.0;   ///< first source moment / R*
    double s_mub_hat = 0.0; ///< source moment of order mu+beta / R*
};

struct SmallnessCertificate {
    SmallnessInputs inputs;
    double C_mu = 0.0;
    double order = 0.0; ///< mu + beta, the moment order the exponents are evaluated at
    double p = 0.0;
    double q = 0.0;
    double rho = 0.0;
    double p_at_mu = 0.0; ///< (mu+gamma-1)/(1+gamma-alpha-beta), for comparison only
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double kappa = 0.0;
    bool pass = false;
    std::vector<std::string> notes;
};

/// Empty when the hypotheses hold; otherwise describes the first failure.
inline std::string smallness_hypothesis_failure(const SmallnessInputs& in)
{
    std::ostringstream os;
    if (!(in.mu >= 1.0)) {
        os << "mu=" << in.mu << " must be >= 1";
    } else if (!(in.alpha >= 0.0 && in.alpha <= in.beta && in.beta <= 1.0)) {
        os << "envelope exponents must satisfy 0 <= alpha <= beta <= 1";
    } else if (!(in.mu + in.beta > std::max(2.0 - in.alpha - in.beta, 1.0))) {
        os << "mu+beta=" << in.mu + in.beta << " must exceed max{2-alpha-beta, 1}="
           << std::max(2.0 - in.alpha - in.beta, 1.0);
    } else if (!(in.gamma > std::max(0.0, in.alpha + in.beta - 1.0))) {
        os << "gamma=" << in.gamma << " must exceed max{0, alpha+beta-1}="
           << std::max(0.0, in.alpha + in.beta - 1.0);
    } else if (!(in.A_star > 0.0) || !(in.R_star > 0.0)) {
        os << "A* and R* must be positive";
    } else if (!(in.s1_hat >= 0.0) || !(in.s_mub_hat >= 0.0)) {
        os << "scaled source moments must be nonnegative";
    }
    return os.str();
}

inline SmallnessCertificate smallness_certificate(const SmallnessInputs& in)
{
    if (auto why = smallness_hypothesis_failure(in); !why.empty()) {
        throw ParameterError("smallness hypotheses violated: " + why);
    }
    SmallnessCertificate cert;
    cert.inputs = in;
    cert.C_mu = c_mu(in.mu);
    cert.order = in.mu + in.beta;
    const auto h = holder_exponents(cert.order, in.alpha, in.beta, in.gamma);
    cert.p = h.p;
    cert.q = h.q;
    cert.rho = h.rho;
    cert.p_at_mu = (in.mu + in.gamma - 1.0) / (1.0 + in.gamma - in.alpha - in.beta);

    const double nu = cert.order;
    const double p = cert.p;
    const double q = cert.q;
    const double rho = cert.rho;
    const double Ah = in.A_star / in.R_star;
    const double core = std::pow(std::pow(2.0, nu) * nu, p) * std::pow(q, 1.0 - p) / p;
    const double two_rho = std::pow(2.0, 2.0 + rho);

    cert.kappa2 = in.R_star - 16.0 * cert.C_mu * in.A_star *
                                  (core * std::pow(Ah, p) * std::pow(in.s1_hat, 1.0 + p) + in.s_mub_hat);
    cert.kappa1 = in.R_star - 8.0 * cert.C_mu * in.A_star *
                                  std::pow(two_rho * core * std::pow(Ah, p) * std::pow(in.s1_hat, 1.0 + p + rho) +
                                               two_rho * in.s_mub_hat * std::pow(in.s1_hat, rho),
                                           1.0 / (1.0 + rho));
    cert.kappa = std::max(cert.kappa1, cert.kappa2);
    cert.pass = cert.kappa > 0.0;

    cert.notes.push_back("Hoelder exponents p, q and rho are evaluated at moment order mu+beta; the exponent "
                         "(mu+gamma-1)/(1+gamma-alpha-beta) at order mu is reported as p_at_mu for comparison");
    cert.notes.push_back("the kappa constants carry C_mu where the contraction bracket carries C_mu+2");
    if (rho <= 1.0) {
        cert.notes.push_back("rho <= 1: the Gronwall step is used outside its stated range rho > 1 "
                             "(its argument only needs rho > 0)");
    }
    return cert;
}

/// Convenience: build inputs from model constants at moment order mu.
inline SmallnessInputs smallness_inputs(const ModelConstants& model, double mu)
{
    SmallnessInputs in;
    in.mu = mu;
    in.alpha = model.envelope.alpha;
    in.beta = model.envelope.beta;
    in.gamma = model.gamma;
    in.A_star = model.envelope.A_star;
    in.R_star = model.R_star;
    if (model.R_star > 0.0) {
        in.s1_hat = model.source.moment(1.0) / model.R_star;
        in.s_mub_hat = model.source.moment(mu + model.envelope.beta) / model.R_star;
    }
    return in;
}

} // namespace smol
