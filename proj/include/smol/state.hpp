#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "smol/error.hpp"

namespace smol {

/// Truncated concentration sequence c_1..c_N at time t. c[k-1] holds c_k.
struct StateVector {
    std::vector<double> c;
    double t = 0.0;

    StateVector() = default;
    explicit StateVector(std::size_t n, double time = 0.0) : c(n, 0.0), t(time) {}
    StateVector(std::vector<double> values, double time) : c(std::move(values)), t(time) {}

    std::size_t size() const noexcept { return c.size(); }

    /// 1-based access matching cluster size.
    double operator[](std::size_t k) const { return c[k - 1]; }
    double& operator[](std::size_t k) { return c[k - 1]; }

    std::span<const double> values() const noexcept { return c; }

    bool valid() const
    {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            return false;
        }
        for (double v : c) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                return false;
            }
        }
        return true;
    }

    void validate() const
    {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw ParameterError("state time must be finite and nonnegative");
        }
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (!(c[i] >= 0.0) || !std::isfinite(c[i])) {
                std::ostringstream os;
                os << "state component c_" << i + 1 << " = " << c[i] << " is negative or non-finite";
                throw ParameterError(os.str());
            }
        }
    }
};

/// Neumaier compensated accumulator.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
        return *this;
    }

    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline void require_same_size(const StateVector& a, const StateVector& b)
{
    if (a.size() != b.size()) {
        std::ostringstream os;
        os << "state dimensions differ: " << a.size() << " vs " << b.size();
        throw DimensionError(os.str());
    }
}

} // namespace smol
