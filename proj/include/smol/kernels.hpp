#pragma once

// Coagulation kernels a(k,l), removal rates r_k and source rates s_k, each
// carrying the structural constants the moment and contraction estimates use:
//
//   a(k,l) <= A* (k^alpha l^beta + k^beta l^alpha),   0 <= alpha <= beta <= 1
//   r_k    >= R* k^gamma
//   sum_k k^mu s_k < infinity for every mu >= 0

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "smol/error.hpp"

namespace smol {

/// Growth envelope A*(k^alpha l^beta + k^beta l^alpha) of a kernel.
struct Envelope {
    double A_star = 1.0;
    double alpha = 0.0;
    double beta = 0.0;

    double operator()(double k, double l) const
    {
        return A_star * (std::pow(k, alpha) * std::pow(l, beta) + std::pow(k, beta) * std::pow(l, alpha));
    }

    /// True when the constants satisfy A* > 0 and 0 <= alpha <= beta <= 1.
    bool admissible() const { return A_star > 0.0 && alpha >= 0.0 && alpha <= beta && beta <= 1.0; }
};

enum class KernelFamily { brownian, shear, product_form, constant_monomer, tabulated };

class KernelModel {
public:
    static KernelModel brownian() { return KernelModel(KernelFamily::brownian, {2.0, 0.0, 1.0 / 3.0}); }

    static KernelModel shear() { return KernelModel(KernelFamily::shear, {4.0, 0.0, 1.0}); }

    /// a(k,l) = k^a l^b + k^b l^a; the envelope is the kernel itself with A* = 1.
    static KernelModel product_form(double a, double b)
    {
        if (!(a >= 0.0) || !(b >= 0.0)) {
            throw ParameterError("product-form exponents must be nonnegative");
        }
        KernelModel m(KernelFamily::product_form, {1.0, std::min(a, b), std::max(a, b)});
        m.pa_ = a;
        m.pb_ = b;
        return m;
    }

    /// a(1,1) = A and zero elsewhere.
    static KernelModel constant_monomer(double A)
    {
        if (!(A >= 0.0)) {
            throw ParameterError("constant-monomer rate must be nonnegative");
        }
        // A = 0 is the linear degenerate case; keep a positive envelope constant.
        KernelModel m(KernelFamily::constant_monomer, {A > 0.0 ? A : 1.0, 0.0, 0.0});
        m.pa_ = A;
        return m;
    }

    /// Square table, values[k-1][l-1] = a(k,l). Must be symmetric and nonnegative.
    static KernelModel tabulated(std::vector<std::vector<double>> values, Envelope env)
    {
        const std::size_t n = values.size();
        if (n == 0) {
            throw ParameterError("tabulated kernel is empty");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (values[i].size() != n) {
                throw ParameterError("tabulated kernel must be square");
            }
            for (std::size_t j = 0; j < n; ++j) {
                if (!(values[i][j] >= 0.0) || !std::isfinite(values[i][j])) {
                    throw ParameterError("tabulated kernel has a negative or non-finite entry");
                }
                if (values[i][j] != values[j][i]) {
                    std::ostringstream os;
                    os << "tabulated kernel is not symmetric at (" << i + 1 << "," << j + 1 << ")";
                    throw ParameterError(os.str());
                }
            }
        }
        if (!(env.A_star > 0.0)) {
            throw ParameterError("tabulated kernel must declare an envelope with A* > 0");
        }
        KernelModel m(KernelFamily::tabulated, env);
        m.table_ = std::move(values);
        return m;
    }

    double operator()(std::size_t k, std::size_t l) const { return evaluate(k, l); }

    double evaluate(std::size_t k, std::size_t l) const
    {
        if (k == 0 || l == 0) {
            throw IndexError("cluster sizes start at 1");
        }
        switch (family_) {
        case KernelFamily::brownian: {
            const double x = std::cbrt(static_cast<double>(k));
            const double y = std::cbrt(static_cast<double>(l));
            return (x + y) * (1.0 / x + 1.0 / y);
        }
        case KernelFamily::shear: {
            const double s = std::cbrt(static_cast<double>(k)) + std::cbrt(static_cast<double>(l));
            return s * s * s;
        }
        case KernelFamily::product_form: {
            const double kd = static_cast<double>(k);
            const double ld = static_cast<double>(l);
            return std::pow(kd, pa_) * std::pow(ld, pb_) + std::pow(kd, pb_) * std::pow(ld, pa_);
        }
        case KernelFamily::constant_monomer:
            return (k == 1 && l == 1) ? pa_ : 0.0;
        case KernelFamily::tabulated:
            if (k > table_.size() || l > table_.size()) {
                std::ostringstream os;
                os << "kernel index (" << k << "," << l << ") outside table of size " << table_.size();
                throw IndexError(os.str());
            }
            return table_[k - 1][l - 1];
        }
        return 0.0;
    }

    KernelFamily family() const noexcept { return family_; }
    const Envelope& envelope() const noexcept { return env_; }

    /// Largest admissible cluster size, if the kernel is only defined on a finite table.
    std::optional<std::size_t> max_index() const
    {
        if (family_ == KernelFamily::tabulated) {
            return table_.size();
        }
        return std::nullopt;
    }

    std::string name() const
    {
        switch (family_) {
        case KernelFamily::brownian: return "brownian";
        case KernelFamily::shear: return "shear";
        case KernelFamily::product_form: return "product-form";
        case KernelFamily::constant_monomer: return "constant-monomer";
        case KernelFamily::tabulated: return "tabulated";
        }
        return "unknown";
    }

private:
    KernelModel(KernelFamily f, Envelope env) : family_(f), env_(env) {}

    KernelFamily family_;
    Envelope env_;
    double pa_ = 0.0;
    double pb_ = 0.0;
    std::vector<std::vector<double>> table_;
};

struct EnvelopeCertificate {
    Envelope declared;
    double max_ratio = 0.0;
    std::size_t k_at = 1;
    std::size_t l_at = 1;
};

/// Brute-force scan of a(k,l) / (k^alpha l^beta + k^beta l^alpha) over [1,k_max]^2.
/// Throws CertificationError naming the first (k,l) where the ratio exceeds A*.
inline EnvelopeCertificate fit_envelope(const KernelModel& model, std::size_t k_max)
{
    if (k_max < 2) {
        throw ParameterError("fit_envelope needs k_max >= 2");
    }
    if (auto top = model.max_index()) {
        k_max = std::min(k_max, *top);
    }
    const Envelope& env = model.envelope();
    std::vector<double> pa(k_max + 1), pb(k_max + 1);
    for (std::size_t k = 1; k <= k_max; ++k) {
        pa[k] = std::pow(static_cast<double>(k), env.alpha);
        pb[k] = std::pow(static_cast<double>(k), env.beta);
    }
    EnvelopeCertificate cert{env, 0.0, 1, 1};
    for (std::size_t k = 1; k <= k_max; ++k) {
        for (std::size_t l = 1; l <= k; ++l) {
            const double ratio = model(k, l) / (pa[k] * pb[l] + pb[k] * pa[l]);
            if (ratio > cert.max_ratio) {
                cert.max_ratio = ratio;
                cert.k_at = k;
                cert.l_at = l;
            }
            if (ratio > env.A_star * (1.0 + 1e-12)) {
                std::ostringstream os;
                os << model.name() << " kernel exceeds its envelope at (k,l)=(" << k << "," << l
                   << "): ratio " << ratio << " > A* = " << env.A_star;
                throw CertificationError(os.str(), k, l);
            }
        }
    }
    return cert;
}

enum class RateFamily { power_law, li_chen, tabulated };

class RateModel {
public:
    /// r_k = R k^gamma. R = 0 is accepted as the degenerate pure-coagulation case.
    static RateModel power_law(double R, double gamma)
    {
        if (!(R >= 0.0) || !std::isfinite(gamma)) {
            throw ParameterError("power-law removal needs R >= 0 and finite gamma");
        }
        RateModel m(RateFamily::power_law, R, gamma);
        m.coef_ = R;
        return m;
    }

    /// r_k = C k^{2/3} [1 + (0.084 + 0.0264 exp(-16.7 k^{1/3})) / k^{1/3}].
    /// The bracket is >= 1, so (R*, gamma) = (C, 2/3).
    static RateModel li_chen(double C)
    {
        if (!(C > 0.0)) {
            throw ParameterError("li-chen removal needs C > 0");
        }
        RateModel m(RateFamily::li_chen, C, 2.0 / 3.0);
        m.coef_ = C;
        return m;
    }

    /// values[k-1] = r_k with a declared lower bound R* k^gamma, checked on every entry.
    static RateModel tabulated(std::vector<double> values, double R_star, double gamma)
    {
        if (values.empty()) {
            throw ParameterError("tabulated removal is empty");
        }
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double bound = R_star * std::pow(static_cast<double>(i + 1), gamma);
            if (!(values[i] >= bound * (1.0 - 1e-12))) {
                std::ostringstream os;
                os << "tabulated removal violates r_k >= R* k^gamma at k=" << i + 1;
                throw ParameterError(os.str());
            }
        }
        RateModel m(RateFamily::tabulated, R_star, gamma);
        m.table_ = std::move(values);
        return m;
    }

    double operator()(std::size_t k) const { return evaluate(k); }

    double evaluate(std::size_t k) const
    {
        if (k == 0) {
            throw IndexError("cluster sizes start at 1");
        }
        const double kd = static_cast<double>(k);
        switch (family_) {
        case RateFamily::power_law:
            return coef_ * std::pow(kd, gamma_);
        case RateFamily::li_chen: {
            const double x = std::cbrt(kd);
            return coef_ * x * x * (1.0 + (0.084 + 0.0264 * std::exp(-16.7 * x)) / x);
        }
        case RateFamily::tabulated:
            if (k > table_.size()) {
                std::ostringstream os;
                os << "removal index " << k << " outside table of size " << table_.size();
                throw IndexError(os.str());
            }
            return table_[k - 1];
        }
        return 0.0;
    }

    double R_star() const noexcept { return R_star_; }
    double gamma() const noexcept { return gamma_; }
    RateFamily family() const noexcept { return family_; }

    std::optional<std::size_t> max_index() const
    {
        if (family_ == RateFamily::tabulated) {
            return table_.size();
        }
        return std::nullopt;
    }

    std::string name() const
    {
        switch (family_) {
        case RateFamily::power_law: return "power-law";
        case RateFamily::li_chen: return "li-chen";
        case RateFamily::tabulated: return "tabulated";
        }
        return "unknown";
    }

private:
    RateModel(RateFamily f, double R_star, double gamma) : family_(f), R_star_(R_star), gamma_(gamma) {}

    RateFamily family_;
    double R_star_;
    double gamma_;
    double coef_ = 0.0;
    std::vector<double> table_;
};

enum class SourceFamily { monomer_only, finite_support, geometric_decay };

namespace detail {

// sum_{k>=1} k^n r^{k-1} = sum_{m<n} E(n,m) r^m / (1-r)^{n+1}, E the Eulerian numbers.
inline double geometric_integer_moment(unsigned n, double r)
{
    if (n == 0) {
        return 1.0 / (1.0 - r);
    }
    std::vector<double> row{1.0};
    for (unsigned i = 2; i <= n; ++i) {
        std::vector<double> next(i, 0.0);
        for (unsigned m = 0; m < i; ++m) {
            const double left = m < row.size() ? (m + 1) * row[m] : 0.0;
            const double right = (m >= 1 && m - 1 < row.size()) ? (i - m) * row[m - 1] : 0.0;
            next[m] = left + right;
        }
        row = std::move(next);
    }
    double poly = 0.0;
    for (std::size_t m = row.size(); m-- > 0;) {
        poly = poly * r + row[m];
    }
    return poly / std::pow(1.0 - r, static_cast<double>(n) + 1.0);
}

// Direct summation of sum_k k^mu r^{k-1}, stopped once the geometric tail bound
// is below relative machine precision.
inline double geometric_series_moment(double mu, double r)
{
    double sum = 0.0;
    double comp = 0.0;
    for (std::size_t k = 1;; ++k) {
        const double kd = static_cast<double>(k);
        const double term = std::pow(kd, mu) * std::pow(r, kd - 1.0);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        const double q = std::pow((kd + 1.0) / kd, mu) * r;
        if (q < 1.0) {
            const double tail = term * q / (1.0 - q);
            if (tail <= 1e-17 * sum) {
                break;
            }
        }
        if (k > 100000000) {
            break;
        }
    }
    return sum;
}

} // namespace detail

class SourceModel {
public:
    static SourceModel monomer_only(double s1)
    {
        if (!(s1 >= 0.0)) {
            throw ParameterError("monomer source must be nonnegative");
        }
        SourceModel m(SourceFamily::monomer_only);
        m.entries_[1] = s1;
        return m;
    }

    /// Explicit (k, s_k) pairs; sizes must be >= 1 and distinct.
    static SourceModel finite_support(const std::vector<std::pair<std::size_t, double>>& entries)
    {
        SourceModel m(SourceFamily::finite_support);
        for (const auto& [k, s] : entries) {
            if (k == 0) {
                throw ParameterError("source sizes start at 1");
            }
            if (!(s >= 0.0) || !std::isfinite(s)) {
                throw ParameterError("source rates must be finite and nonnegative");
            }
            if (!m.entries_.emplace(k, s).second) {
                std::ostringstream os;
                os << "duplicate source entry for k=" << k;
                throw ParameterError(os.str());
            }
        }
        return m;
    }

    /// s_k = s1 * ratio^{k-1}, 0 <= ratio < 1.
    static SourceModel geometric_decay(double s1, double ratio)
    {
        if (!(s1 >= 0.0) || !(ratio >= 0.0 && ratio < 1.0)) {
            throw ParameterError("geometric source needs s1 >= 0 and 0 <= ratio < 1");
        }
        SourceModel m(SourceFamily::geometric_decay);
        m.s1_ = s1;
        m.ratio_ = ratio;
        return m;
    }

    double operator()(std::size_t k) const { return evaluate(k); }

    double evaluate(std::size_t k) const
    {
        if (k == 0) {
            throw IndexError("cluster sizes start at 1");
        }
        if (family_ == SourceFamily::geometric_decay) {
            return s1_ * std::pow(ratio_, static_cast<double>(k) - 1.0);
        }
        auto it = entries_.find(k);
        return it == entries_.end() ? 0.0 : it->second;
    }

    /// sum_k k^mu s_k over the full (untruncated) support.
    double moment(double mu) const
    {
        if (!(mu >= 0.0)) {
            throw ParameterError("source moment order must be nonnegative");
        }
        if (family_ == SourceFamily::geometric_decay) {
            if (s1_ == 0.0) {
                return 0.0;
            }
            if (ratio_ == 0.0) {
                return s1_;
            }
            const double n = std::round(mu);
            if (n == mu && n <= 40.0) {
                return s1_ * detail::geometric_integer_moment(static_cast<unsigned>(n), ratio_);
            }
            return s1_ * detail::geometric_series_moment(mu, ratio_);
        }
        double sum = 0.0;
        for (const auto& [k, s] : entries_) {
            sum += std::pow(static_cast<double>(k), mu) * s;
        }
        return sum;
    }

    bool is_zero() const
    {
        if (family_ == SourceFamily::geometric_decay) {
            return s1_ == 0.0;
        }
        return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.second == 0.0; });
    }

    /// Largest size with s_k > 0; nullopt for infinite support.
    std::optional<std::size_t> support_max() const
    {
        if (family_ == SourceFamily::geometric_decay) {
            if (s1_ == 0.0) {
                return 0;
            }
            if (ratio_ == 0.0) {
                return 1;
            }
            return std::nullopt;
        }
        std::size_t top = 0;
        for (const auto& [k, s] : entries_) {
            if (s > 0.0) {
                top = std::max(top, k);
            }
        }
        return top;
    }

    SourceFamily family() const noexcept { return family_; }

    std::string name() const
    {
        switch (family_) {
        case SourceFamily::monomer_only: return "monomer-only";
        case SourceFamily::finite_support: return "finite-support";
        case SourceFamily::geometric_decay: return "geometric-decay";
        }
        return "unknown";
    }

private:
    explicit SourceModel(SourceFamily f) : family_(f) {}

    SourceFamily family_;
    std::map<std::size_t, double> entries_;
    double s1_ = 0.0;
    double ratio_ = 0.0;
};

} // namespace smol
