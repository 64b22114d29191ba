#pragma once

// Truncated coagulation system on sizes 1..N:
//
//   dc_k/dt = 1/2 sum_{l<k} a(k-l,l) c_{k-l} c_l - c_k sum_{l<=N-k} a(k,l) c_l + s_k - r_k c_k
//
// The loss sum stops at l = N-k, so coagulation never moves mass out of {1..N}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "smol/error.hpp"
#include "smol/kernels.hpp"
#include "smol/state.hpp"

namespace smol {

class CoagulationSystem {
public:
    /// Kernel tables larger than this are evaluated on the fly instead.
    static constexpr std::size_t table_byte_limit = std::size_t{256} << 20;

    CoagulationSystem(KernelModel kernel, RateModel removal, SourceModel source, std::size_t n)
        : kernel_(std::move(kernel)), removal_(std::move(removal)), source_(std::move(source)), n_(n)
    {
        if (n_ == 0) {
            throw ParameterError("truncation size N must be positive");
        }
        if (auto top = kernel_.max_index(); top && n_ > 1 && *top < n_ - 1) {
            std::ostringstream os;
            os << "tabulated kernel covers sizes up to " << *top << " but N=" << n_ << " needs " << n_ - 1;
            throw IndexError(os.str());
        }
        if (auto top = removal_.max_index(); top && *top < n_) {
            std::ostringstream os;
            os << "tabulated removal covers sizes up to " << *top << " but N=" << n_;
            throw IndexError(os.str());
        }
        r_.resize(n_);
        s_.resize(n_);
        for (std::size_t k = 1; k <= n_; ++k) {
            r_[k - 1] = removal_(k);
            s_[k - 1] = source_(k);
        }
        const std::size_t entries = n_ * (n_ - 1) / 2;
        if (entries * sizeof(double) <= table_byte_limit) {
            offset_.resize(n_ + 1, 0);
            table_.resize(entries);
            for (std::size_t i = 1; i < n_; ++i) {
                offset_[i + 1] = offset_[i] + (n_ - i);
                for (std::size_t j = 1; j <= n_ - i; ++j) {
                    table_[offset_[i] + j - 1] = kernel_(i, j);
                }
            }
            cached_ = true;
        }
    }

    std::size_t size() const noexcept { return n_; }
    bool kernel_cached() const noexcept { return cached_; }

    const KernelModel& kernel_model() const noexcept { return kernel_; }
    const RateModel& removal_model() const noexcept { return removal_; }
    const SourceModel& source_model() const noexcept { return source_; }

    /// a(i,j) for i + j <= N (the only entries the truncated system uses).
    double kernel(std::size_t i, std::size_t j) const
    {
        if (cached_ && i + j <= n_) {
            return table_[offset_[i] + j - 1];
        }
        return kernel_(i, j);
    }

    double removal(std::size_t k) const { return r_[k - 1]; }
    double source(std::size_t k) const { return s_[k - 1]; }
    std::span<const double> removal_rates() const noexcept { return r_; }
    std::span<const double> source_rates() const noexcept { return s_; }

    /// Writes the right-hand side at concentrations c into out (both of length N).
    void rhs(std::span<const double> c, std::span<double> out) const
    {
        check_dims(c.size(), out.size());
        std::fill(out.begin(), out.end(), 0.0);
        // Pair (i,j) with i + j <= N feeds gain at i+j and loss at i.
        for (std::size_t i = 1; i < n_; ++i) {
            const double ci = c[i - 1];
            const std::size_t len = n_ - i;
            double loss = 0.0;
            if (cached_) {
                const double* row = table_.data() + offset_[i];
                for (std::size_t j = 1; j <= len; ++j) {
                    const double w = row[j - 1] * c[j - 1];
                    loss += w;
                    out[i + j - 1] += 0.5 * ci * w;
                }
            } else {
                for (std::size_t j = 1; j <= len; ++j) {
                    const double w = kernel_(i, j) * c[j - 1];
                    loss += w;
                    out[i + j - 1] += 0.5 * ci * w;
                }
            }
            out[i - 1] -= ci * loss;
        }
        for (std::size_t k = 1; k <= n_; ++k) {
            out[k - 1] += s_[k - 1] - r_[k - 1] * c[k - 1];
        }
    }

    std::vector<double> rhs(const StateVector& state) const
    {
        std::vector<double> out(n_);
        rhs(state.c, out);
        return out;
    }

    /// sum_k k s_k - sum_k k r_k c_k over 1..N: the exact time derivative of the
    /// truncated first moment.
    double mass_balance(std::span<const double> c) const
    {
        check_dims(c.size(), n_);
        CompensatedSum acc;
        for (std::size_t k = 1; k <= n_; ++k) {
            const double kd = static_cast<double>(k);
            acc += kd * s_[k - 1];
            acc += -kd * r_[k - 1] * c[k - 1];
        }
        return acc.value();
    }

private:
    void check_dims(std::size_t a, std::size_t b) const
    {
        if (a != n_ || b != n_) {
            std::ostringstream os;
            os << "expected vectors of length N=" << n_ << ", got " << a << " and " << b;
            throw DimensionError(os.str());
        }
    }

    KernelModel kernel_;
    RateModel removal_;
    SourceModel source_;
    std::size_t n_;
    std::vector<double> r_;
    std::vector<double> s_;
    std::vector<std::size_t> offset_;
    std::vector<double> table_;
    bool cached_ = false;
};

/// One-shot right-hand side evaluation.
inline std::vector<double> rhs(const KernelModel& kernel, const RateModel& removal, const SourceModel& source,
                               const StateVector& state)
{
    return CoagulationSystem(kernel, removal, source, state.size()).rhs(state);
}

struct WeakFormCheck {
    double paired = 0.0;   ///< sum_k phi_k rhs_k
    double weak = 0.0;     ///< coagulation pairing + source - removal
    double residual = 0.0; ///< |paired - weak|
    double scale = 0.0;    ///< sum of absolute values of every weak-form term

    double relative() const { return scale > 0.0 ? residual / scale : residual; }
};

/// Compares phi . rhs(c) against the weak form
///   1/2 sum_{k+l<=N} a(k,l) c_k c_l (phi_{k+l} - phi_k - phi_l) + sum phi_k s_k - sum phi_k r_k c_k.
inline WeakFormCheck weak_form_residual(const CoagulationSystem& sys, const StateVector& state,
                                        std::span<const double> phi)
{
    const std::size_t n = sys.size();
    if (state.size() != n || phi.size() != n) {
        throw DimensionError("weak form needs state and test sequence of length N");
    }
    const auto& c = state.c;
    std::vector<double> f(n);
    sys.rhs(c, f);

    WeakFormCheck out;
    CompensatedSum paired;
    for (std::size_t k = 0; k < n; ++k) {
        paired += phi[k] * f[k];
    }
    CompensatedSum weak;
    double scale = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
        for (std::size_t l = 1; k + l <= n; ++l) {
            const double w = 0.5 * sys.kernel(k, l) * c[k - 1] * c[l - 1];
            weak += w * phi[k + l - 1];
            weak += -w * phi[k - 1];
            weak += -w * phi[l - 1];
            scale += std::abs(w) * (std::abs(phi[k + l - 1]) + std::abs(phi[k - 1]) + std::abs(phi[l - 1]));
        }
    }
    for (std::size_t k = 1; k <= n; ++k) {
        const double src = phi[k - 1] * sys.source(k);
        const double rem = phi[k - 1] * sys.removal(k) * c[k - 1];
        weak += src;
        weak += -rem;
        scale += std::abs(src) + std::abs(rem);
    }
    out.paired = paired.value();
    out.weak = weak.value();
    out.residual = std::abs(out.paired - out.weak);
    out.scale = scale;
    return out;
}

} // namespace smol
