#pragma once

// Moments m_mu = sum_k k^mu c_k and the a-priori bounds they satisfy along
// solutions: the total-mass bound, the nonlinear Gronwall bound, the general
// higher-moment bound and the two initial-data free large-time bounds.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/kernels.hpp"
#include "smol/state.hpp"
#include "smol/system.hpp"

namespace smol {

inline double moment(std::span<const double> c, double mu)
{
    if (!(mu >= 0.0)) {
        throw ParameterError("moment order must be nonnegative");
    }
    CompensatedSum acc;
    for (std::size_t k = 1; k <= c.size(); ++k) {
        if (c[k - 1] != 0.0) {
            acc += std::pow(static_cast<double>(k), mu) * c[k - 1];
        }
    }
    return acc.value();
}

inline double moment(const StateVector& state, double mu) { return moment(state.values(), mu); }

struct TotalMassBound {
    double bound = 0.0;       ///< max{m1_in, s1_hat}, valid for all t >= 0
    double large_time = 0.0;  ///< 2 s1_hat
    double entry_time = 0.0;  ///< m1(t) <= 2 s1_hat for t >= entry_time; +inf if never guaranteed
};

/// s1_hat = (source first moment) / R*.  R* > 0 is only needed for the entry time.
inline TotalMassBound total_mass_bound(double m1_in, double s1_hat, double R_star = 1.0)
{
    if (!(m1_in >= 0.0) || !(s1_hat >= 0.0)) {
        throw ParameterError("total mass bound needs m1_in >= 0 and s1_hat >= 0");
    }
    if (!(R_star > 0.0)) {
        throw ParameterError("total mass bound needs R* > 0");
    }
    TotalMassBound out;
    out.bound = std::max(m1_in, s1_hat);
    out.large_time = 2.0 * s1_hat;
    if (m1_in == 0.0) {
        out.entry_time = 0.0;
    } else if (s1_hat == 0.0) {
        out.entry_time = std::numeric_limits<double>::infinity();
    } else {
        // (m1_in - s1_hat) e^{-R* t} + s1_hat <= 2 s1_hat once m1_in e^{-R* t} <= s1_hat
        out.entry_time = std::max(0.0, std::log(m1_in / s1_hat) / R_star);
    }
    return out;
}

/// f' + Lambda f^{1+rho} <= Xi on (t0, inf) with f >= 0.
struct GronwallBound {
    double rho = 1.0;
    double Lambda = 1.0;
    double Xi = 1.0;
    double t0 = 0.0;

    /// The lemma is stated for rho > 1; the argument only needs rho > 0.
    bool rho_below_statement_range() const { return rho <= 1.0; }

    void validate() const
    {
        if (!(rho > 0.0) || !(Lambda > 0.0) || !(Xi > 0.0) || !(t0 >= 0.0)) {
            throw ParameterError("Gronwall bound needs rho, Lambda, Xi > 0 and t0 >= 0");
        }
    }

    double plateau() const { return std::pow(2.0 * Xi / Lambda, 1.0 / (1.0 + rho)); }
};

inline double gronwall_bound(const GronwallBound& b, double t)
{
    b.validate();
    if (!(t > b.t0)) {
        std::ostringstream os;
        os << "Gronwall bound needs t > t0 (t=" << t << ", t0=" << b.t0 << ")";
        throw DomainError(os.str());
    }
    const double transient = std::pow(2.0 / (b.rho * b.Lambda), 1.0 / b.rho) * std::pow(t - b.t0, -1.0 / b.rho);
    return std::max(b.plateau(), transient);
}

/// Structural constants entering the moment bounds.  s1 and s_mu are the
/// unscaled source moments; the hatted versions are divided by R*.
struct MomentParams {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 1.0;
    double A_star = 1.0;
    double R_star = 1.0;
    double m1_in = 0.0;
    double s1 = 0.0;
    double s_mu = 0.0;

    double A_hat() const { return A_star / R_star; }
    double s1_hat() const { return s1 / R_star; }
    double s_mu_hat() const { return s_mu / R_star; }
};

/// Exponents for moment order mu: p from Hoelder, q its conjugate, rho = gamma/(mu-1).
struct HolderExponents {
    double p = 0.0;
    double q = 0.0;
    double rho = 0.0;
};

/// Empty string when the hypotheses hold, otherwise a description of the first failure.
inline std::string moment_hypothesis_failure(double mu, double alpha, double beta, double gamma, double R_star)
{
    std::ostringstream os;
    if (!(alpha >= 0.0 && alpha <= beta && beta <= 1.0)) {
        os << "envelope exponents must satisfy 0 <= alpha <= beta <= 1 (alpha=" << alpha << ", beta=" << beta << ")";
    } else if (!(gamma > std::max(0.0, alpha + beta - 1.0))) {
        os << "gamma=" << gamma << " must exceed max{0, alpha+beta-1}=" << std::max(0.0, alpha + beta - 1.0);
    } else if (!(mu > std::max(2.0 - alpha - beta, 1.0))) {
        os << "mu=" << mu << " must exceed max{2-alpha-beta, 1}=" << std::max(2.0 - alpha - beta, 1.0);
    } else if (!(R_star > 0.0)) {
        os << "R* must be positive";
    }
    return os.str();
}

inline HolderExponents holder_exponents(double mu, double alpha, double beta, double gamma)
{
    HolderExponents h;
    h.p = (mu + gamma - 1.0) / (1.0 + gamma - alpha - beta);
    h.q = h.p / (h.p - 1.0);
    h.rho = gamma / (mu - 1.0);
    return h;
}

inline void require_moment_hypotheses(double mu, const MomentParams& prm)
{
    if (auto why = moment_hypothesis_failure(mu, prm.alpha, prm.beta, prm.gamma, prm.R_star); !why.empty()) {
        throw ParameterError("moment bound not applicable: " + why);
    }
    if (!(prm.A_star > 0.0) || !(prm.m1_in >= 0.0) || !(prm.s1 >= 0.0) || !(prm.s_mu >= 0.0)) {
        throw ParameterError("moment bound needs A* > 0 and nonnegative m1_in, s1, s_mu");
    }
}

struct GeneralMomentConstants {
    HolderExponents exps;
    double M = 0.0; ///< max{m1_in, s1_hat}
    GronwallBound gronwall;
};

/// Xi and Lambda of the Gronwall application with t0 = 0. M = 0 means the
/// solution is identically zero and the bound degenerates to 0.
inline GeneralMomentConstants general_moment_constants(double mu, const MomentParams& prm)
{
    require_moment_hypotheses(mu, prm);
    GeneralMomentConstants out;
    out.exps = holder_exponents(mu, prm.alpha, prm.beta, prm.gamma);
    const auto& [p, q, rho] = out.exps;
    out.M = std::max(prm.m1_in, prm.s1_hat());
    const double pref = std::pow(std::pow(2.0, mu - 1.0) * mu, p) * std::pow(q, 1.0 - p) / (2.0 * p);
    out.gronwall.rho = rho;
    out.gronwall.t0 = 0.0;
    out.gronwall.Xi =
        pref * std::pow(prm.R_star, 1.0 - p) * std::pow(prm.A_star, p) * std::pow(out.M, 1.0 + p) + prm.s_mu;
    out.gronwall.Lambda = 0.5 * prm.R_star * std::pow(out.M, -rho);
    return out;
}

inline double general_moment_bound(double mu, const MomentParams& prm, double t)
{
    const auto k = general_moment_constants(mu, prm);
    if (k.M == 0.0) {
        return 0.0;
    }
    return gronwall_bound(k.gronwall, t);
}

struct LargeTimeBounds {
    HolderExponents exps;
    double bound1 = 0.0;
    double bound2 = 0.0;
    double mass_entry = 0.0;   ///< m1 <= 2 s1_hat from here on
    double bound1_entry = 0.0; ///< bound1 holds from here on
    double bound2_entry = 0.0; ///< bound2 holds from here on
};

/// The two initial-data free bounds together with entry times traced through
/// the argument: the data enter only via the total-mass entry time.
inline LargeTimeBounds large_time_moment_bounds(double mu, const MomentParams& prm)
{
    require_moment_hypotheses(mu, prm);
    LargeTimeBounds out;
    out.exps = holder_exponents(mu, prm.alpha, prm.beta, prm.gamma);
    const auto& [p, q, rho] = out.exps;
    const double s1h = prm.s1_hat();
    const double Ah = prm.A_hat();
    const double smh = prm.s_mu_hat();
    const double core = std::pow(std::pow(2.0, mu) * mu, p) * std::pow(q, 1.0 - p) / p;
    const double two_rho = std::pow(2.0, 2.0 + rho);
    const double half1 = std::pow(two_rho * core * std::pow(Ah, p) * std::pow(s1h, 1.0 + p + rho) +
                                      two_rho * smh * std::pow(s1h, rho),
                                  1.0 / (1.0 + rho));
    out.bound1 = 2.0 * half1;
    out.bound2 = 4.0 * (core * std::pow(Ah, p) * std::pow(s1h, 1.0 + p) + smh);

    const double inf = std::numeric_limits<double>::infinity();
    if (s1h == 0.0) {
        out.mass_entry = prm.m1_in == 0.0 ? 0.0 : inf;
        out.bound1_entry = out.bound2_entry = inf;
        return out;
    }
    out.mass_entry = total_mass_bound(prm.m1_in, s1h, prm.R_star).entry_time;
    // transient 2 (4/(R* rho))^{1/rho} s1_hat (t - T1)^{-1/rho} drops below half1
    const double transient_coef = 2.0 * std::pow(4.0 / (prm.R_star * rho), 1.0 / rho) * s1h;
    out.bound1_entry = out.mass_entry + std::pow(transient_coef / half1, rho);
    // bound1 e^{-R*(t-T2)/2} <= bound2/2
    out.bound2_entry =
        out.bound1_entry + std::max(0.0, 2.0 / prm.R_star * std::log(2.0 * out.bound1 / out.bound2));
    return out;
}

/// Model constants that do not depend on the moment order.
struct ModelConstants {
    Envelope envelope;
    double R_star = 1.0;
    double gamma = 1.0;
    SourceModel source = SourceModel::monomer_only(0.0);

    static ModelConstants from(const CoagulationSystem& sys)
    {
        return {sys.kernel_model().envelope(), sys.removal_model().R_star(), sys.removal_model().gamma(),
                sys.source_model()};
    }

    MomentParams at(double mu, double m1_in) const
    {
        MomentParams p;
        p.alpha = envelope.alpha;
        p.beta = envelope.beta;
        p.gamma = gamma;
        p.A_star = envelope.A_star;
        p.R_star = R_star;
        p.m1_in = m1_in;
        p.s1 = source.moment(1.0);
        p.s_mu = source.moment(mu);
        return p;
    }
};

struct MomentEntry {
    double mu = 0.0;
    double value = 0.0;
    std::optional<double> bound_total_mass;
    std::optional<double> bound_general;
    std::optional<double> bound_large_time;
    bool satisfied_total_mass = true;
    bool satisfied_general = true;
    bool satisfied_large_time = true;

    bool ok() const { return satisfied_total_mass && satisfied_general && satisfied_large_time; }
};

struct MomentReport {
    double t = 0.0;
    std::vector<MomentEntry> entries;

    bool ok() const
    {
        return std::all_of(entries.begin(), entries.end(), [](const MomentEntry& e) { return e.ok(); });
    }
};

/// Evaluates every applicable bound at each sample. Bounds whose hypotheses fail
/// are left empty. m1_in is the first moment of the initial data.
inline std::vector<MomentReport> audit_trajectory(const Trajectory& traj, std::span<const double> mus,
                                                  const ModelConstants& model, double m1_in,
                                                  double slack = 1e-8)
{
    auto within = [slack](double value, double bound) { return value <= bound * (1.0 + slack); };
    const bool removal_ok = model.R_star > 0.0 && model.gamma >= 0.0;
    std::optional<TotalMassBound> mass;
    if (removal_ok) {
        mass = total_mass_bound(m1_in, model.source.moment(1.0) / model.R_star, model.R_star);
    }

    struct Prepared {
        double mu;
        bool applicable;
        MomentParams prm;
        GeneralMomentConstants general;
        LargeTimeBounds large;
    };
    std::vector<Prepared> prepared;
    for (double mu : mus) {
        Prepared p{mu, false, {}, {}, {}};
        if (removal_ok &&
            moment_hypothesis_failure(mu, model.envelope.alpha, model.envelope.beta, model.gamma, model.R_star)
                .empty()) {
            p.applicable = true;
            p.prm = model.at(mu, m1_in);
            p.general = general_moment_constants(mu, p.prm);
            p.large = large_time_moment_bounds(mu, p.prm);
        }
        prepared.push_back(p);
    }

    std::vector<MomentReport> out;
    out.reserve(traj.samples.size());
    for (const auto& s : traj.samples) {
        MomentReport rep;
        rep.t = s.t;
        for (const auto& p : prepared) {
            MomentEntry e;
            e.mu = p.mu;
            e.value = moment(s, p.mu);
            if (p.mu == 1.0 && mass) {
                double b = mass->bound;
                if (s.t >= mass->entry_time) {
                    b = std::min(b, mass->large_time);
                }
                e.bound_total_mass = b;
                e.satisfied_total_mass = within(e.value, b);
            }
            if (p.applicable) {
                if (s.t > 0.0) {
                    const double b = p.general.M == 0.0 ? 0.0 : gronwall_bound(p.general.gronwall, s.t);
                    e.bound_general = b;
                    e.satisfied_general = within(e.value, b);
                }
                std::optional<double> lt;
                if (s.t >= p.large.bound1_entry) {
                    lt = p.large.bound1;
                }
                if (s.t >= p.large.bound2_entry) {
                    lt = lt ? std::min(*lt, p.large.bound2) : p.large.bound2;
                }
                if (lt) {
                    e.bound_large_time = lt;
                    e.satisfied_large_time = within(e.value, *lt);
                }
            }
            rep.entries.push_back(e);
        }
        out.push_back(std::move(rep));
    }
    return out;
}

} // namespace smol
