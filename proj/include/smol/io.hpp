#pragma once

// CSV export and import. Numbers are written with 17 significant digits so that
// reading a file back reproduces every double bit for bit.

#include <charconv>
#include <cstddef>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/moments.hpp"
#include "smol/state.hpp"

namespace smol::io {

enum class TrajectoryFormat { long_format, wide_format };

inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    if (!s.empty() && s.front() == '+') {
        s.remove_prefix(1);
    }
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParameterError("not a number: '" + std::string(s) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            out.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline void write_trajectory(std::ostream& os, const Trajectory& traj, TrajectoryFormat fmt)
{
    if (fmt == TrajectoryFormat::long_format) {
        os << "t,k,c_k\n";
        for (const auto& s : traj.samples) {
            const std::string t = format_double(s.t);
            for (std::size_t k = 1; k <= s.size(); ++k) {
                os << t << ',' << k << ',' << format_double(s[k]) << '\n';
            }
        }
        return;
    }
    const std::size_t n = traj.empty() ? 0 : traj.samples.front().size();
    os << 't';
    for (std::size_t k = 1; k <= n; ++k) {
        os << ",c_" << k;
    }
    os << '\n';
    for (const auto& s : traj.samples) {
        os << format_double(s.t);
        for (std::size_t k = 1; k <= s.size(); ++k) {
            os << ',' << format_double(s[k]);
        }
        os << '\n';
    }
}

/// Reads either layout, detected from the header line.
inline Trajectory read_trajectory(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) {
        throw ParameterError("trajectory file is empty");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    Trajectory traj;
    std::size_t lineno = 1;
    auto fail = [&](const std::string& why) {
        std::ostringstream os;
        os << "trajectory line " << lineno << ": " << why;
        throw ParameterError(os.str());
    };
    if (line == "t,k,c_k") {
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line == "\r") {
                continue;
            }
            const auto f = split_csv(line);
            if (f.size() != 3) {
                fail("expected 3 fields");
            }
            double t = 0.0, v = 0.0;
            std::size_t k = 0;
            try {
                t = parse_double(f[0]);
                v = parse_double(f[2]);
                k = static_cast<std::size_t>(std::stoull(std::string(f[1])));
            } catch (const std::exception& e) {
                fail(e.what());
            }
            if (traj.samples.empty() || traj.samples.back().t != t) {
                if (k != 1) {
                    fail("each time block must start at k=1");
                }
                traj.samples.emplace_back(std::vector<double>{}, t);
            }
            auto& st = traj.samples.back();
            if (k != st.size() + 1) {
                fail("sizes must be listed consecutively from 1");
            }
            st.c.push_back(v);
        }
    } else if (line.rfind("t,c_1", 0) == 0 || line == "t") {
        const std::size_t n = split_csv(line).size() - 1;
        while (std::getline(is, line)) {
            ++lineno;
            if (line.empty() || line == "\r") {
                continue;
            }
            const auto f = split_csv(line);
            if (f.size() != n + 1) {
                fail("field count differs from header");
            }
            StateVector st(n, 0.0);
            try {
                st.t = parse_double(f[0]);
                for (std::size_t k = 1; k <= n; ++k) {
                    st[k] = parse_double(f[k]);
                }
            } catch (const std::exception& e) {
                fail(e.what());
            }
            traj.samples.push_back(std::move(st));
        }
    } else {
        throw ParameterError("unrecognised trajectory header '" + line + "'");
    }
    for (std::size_t i = 0; i < traj.samples.size(); ++i) {
        if (traj.samples[i].size() != traj.samples.front().size()) {
            throw ParameterError("trajectory samples have different lengths");
        }
        if (i > 0 && !(traj.samples[i].t > traj.samples[i - 1].t)) {
            throw ParameterError("trajectory sample times must be strictly increasing");
        }
    }
    return traj;
}

/// Two-column `k,<name>` table.
inline void write_state(std::ostream& os, const StateVector& st, const std::string& name = "Q_k")
{
    os << "k," << name << '\n';
    for (std::size_t k = 1; k <= st.size(); ++k) {
        os << k << ',' << format_double(st[k]) << '\n';
    }
}

inline StateVector read_state(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) {
        throw ParameterError("state file is empty");
    }
    StateVector st;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto f = split_csv(line);
        std::ostringstream where;
        where << "state line " << lineno << ": ";
        if (f.size() != 2) {
            throw ParameterError(where.str() + "expected 2 fields");
        }
        std::size_t k = 0;
        double v = 0.0;
        try {
            k = static_cast<std::size_t>(std::stoull(std::string(f[0])));
            v = parse_double(f[1]);
        } catch (const std::exception& e) {
            throw ParameterError(where.str() + e.what());
        }
        if (k != st.size() + 1) {
            throw ParameterError(where.str() + "sizes must be listed consecutively from 1");
        }
        st.c.push_back(v);
    }
    return st;
}

inline void write_moment_reports(std::ostream& os, const std::vector<MomentReport>& reports)
{
    auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    os << "t,mu,value,bound_total_mass,bound_general,bound_large_time,ok\n";
    for (const auto& r : reports) {
        for (const auto& e : r.entries) {
            os << format_double(r.t) << ',' << format_double(e.mu) << ',' << format_double(e.value) << ','
               << opt(e.bound_total_mass) << ',' << opt(e.bound_general) << ',' << opt(e.bound_large_time) << ','
               << (e.ok() ? 1 : 0) << '\n';
        }
    }
}

} // namespace smol::io
