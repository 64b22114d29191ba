#pragma once

// Run configuration: strict JSON schema (unknown keys are errors) describing the
// models, truncation size, initial data, integrator and diagnostics of a run.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "smol/analytic.hpp"
#include "smol/equilibrium.hpp"
#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/io.hpp"
#include "smol/kernels.hpp"
#include "smol/moments.hpp"

namespace smol {

using json = nlohmann::json;

inline constexpr int config_schema_version = 1;

/// Invalid configuration; pointer() is the JSON pointer of the offending field.
class ConfigError : public Error {
public:
    ConfigError(const std::string& pointer, const std::string& what)
        : Error((pointer.empty() ? std::string("/") : pointer) + ": " + what), pointer_(pointer) {}
    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

/// Malformed JSON text.
class ConfigSyntaxError : public Error {
public:
    ConfigSyntaxError(const std::string& what, std::size_t line, std::size_t column)
        : Error(what), line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

namespace detail {

// JSON integers built in code are signed even when nonnegative; parsed text yields unsigned.
inline bool is_nonnegative_integer(const json& v)
{
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0);
}

// Strict view of one JSON object: every key must be consumed before finish().
class ObjectReader {
public:
    ObjectReader(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr))
    {
        if (!j_.is_object()) {
            throw ConfigError(ptr_, "expected an object");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }
    std::string ptr(const std::string& key) const { return ptr_ + "/" + key; }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        if (!j_.contains(key)) {
            throw ConfigError(ptr(key), "required field is missing");
        }
        return j_.at(key);
    }

    double number(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_number()) {
            throw ConfigError(ptr(key), "expected a number");
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            throw ConfigError(ptr(key), "expected a finite number");
        }
        return d;
    }

    double number(const std::string& key, double fallback) { return has(key) ? number(key) : mark(key, fallback); }

    std::uint64_t unsigned_integer(const std::string& key)
    {
        const json& v = raw(key);
        if (!is_nonnegative_integer(v)) {
            throw ConfigError(ptr(key), "expected a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback)
    {
        return has(key) ? unsigned_integer(key) : mark(key, fallback);
    }

    std::string string(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_string()) {
            throw ConfigError(ptr(key), "expected a string");
        }
        return v.get<std::string>();
    }

    std::string string(const std::string& key, const std::string& fallback)
    {
        return has(key) ? string(key) : mark(key, fallback);
    }

    std::vector<double> numbers(const std::string& key)
    {
        const json& v = raw(key);
        if (!v.is_array()) {
            throw ConfigError(ptr(key), "expected an array of numbers");
        }
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) {
                throw ConfigError(ptr(key) + "/" + std::to_string(i), "expected a number");
            }
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) {
                throw ConfigError(ptr(key), "unknown key");
            }
        }
    }

private:
    template <class T>
    T mark(const std::string& key, T value)
    {
        seen_.insert(key);
        return value;
    }

    const json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
};

template <class F>
auto wrap_model_error(const std::string& ptr, F&& build) -> decltype(build())
{
    try {
        return build();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(ptr, e.what());
    }
}

} // namespace detail

enum class InitialKind { zero, monomer, tabulated, file, random };

struct InitialSpec {
    InitialKind kind = InitialKind::zero;
    double m = 0.0;                ///< monomer density
    std::vector<double> values;    ///< tabulated c_1, c_2, ...
    std::filesystem::path path;    ///< `k,c_k` file
    double total_mass = 1.0;       ///< random: first moment of the drawn state
    std::size_t max_size = 0;      ///< random: support 1..max_size (0 means N)
};

struct RunConfig {
    int schema = config_schema_version;
    std::optional<std::size_t> N;
    std::optional<KernelModel> kernel;
    std::optional<RateModel> removal;
    std::optional<SourceModel> source;
    InitialSpec initial;
    IntegratorConfig integrator;
    std::vector<double> mu_list{1.0, 2.0, 3.0};
    std::optional<double> smallness_mu;
    EquilibriumOptions equilibrium;
    std::optional<ExampleParams> example;
    std::size_t example_N = 16;
    std::string out_dir = "out";
    io::TrajectoryFormat format = io::TrajectoryFormat::long_format;
    std::uint64_t seed = 0;
    std::filesystem::path base_dir;
    std::vector<std::string> warnings;

    bool has_model() const { return N && kernel && removal && source; }

    void require_model() const
    {
        if (!N) {
            throw ConfigError("/N", "required field is missing");
        }
        if (!kernel) {
            throw ConfigError("/kernel", "required field is missing");
        }
        if (!removal) {
            throw ConfigError("/removal", "required field is missing");
        }
        if (!source) {
            throw ConfigError("/source", "required field is missing");
        }
    }

    bool assumptions_ok() const { return warnings.empty(); }

    CoagulationSystem system() const
    {
        require_model();
        return detail::wrap_model_error("/N", [&] { return CoagulationSystem(*kernel, *removal, *source, *N); });
    }

    ModelConstants constants() const
    {
        require_model();
        return {kernel->envelope(), removal->R_star(), removal->gamma(), *source};
    }

    StateVector initial_state() const
    {
        require_model();
        const std::size_t n = *N;
        StateVector st(n, 0.0);
        switch (initial.kind) {
        case InitialKind::zero:
            break;
        case InitialKind::monomer:
            st[1] = initial.m;
            break;
        case InitialKind::tabulated:
            if (initial.values.size() > n) {
                throw ConfigError("/initial/values", "more entries than N");
            }
            for (std::size_t k = 1; k <= initial.values.size(); ++k) {
                st[k] = initial.values[k - 1];
            }
            break;
        case InitialKind::file: {
            std::ifstream in(initial.path);
            if (!in) {
                throw ConfigError("/initial/path", "cannot open " + initial.path.string());
            }
            const StateVector loaded = detail::wrap_model_error("/initial/path", [&] { return io::read_state(in); });
            if (loaded.size() > n) {
                throw ConfigError("/initial/path", "file lists more sizes than N");
            }
            for (std::size_t k = 1; k <= loaded.size(); ++k) {
                st[k] = loaded[k];
            }
            break;
        }
        case InitialKind::random: {
            const std::size_t top = initial.max_size == 0 ? n : std::min(initial.max_size, n);
            std::mt19937_64 rng(seed);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            double mass = 0.0;
            for (std::size_t k = 1; k <= top; ++k) {
                st[k] = u(rng);
                mass += static_cast<double>(k) * st[k];
            }
            if (mass > 0.0) {
                for (std::size_t k = 1; k <= top; ++k) {
                    st[k] *= initial.total_mass / mass;
                }
            }
            break;
        }
        }
        detail::wrap_model_error("/initial", [&] { st.validate(); return 0; });
        return st;
    }
};

namespace detail {

inline KernelModel parse_kernel(const json& j, const std::string& ptr)
{
    ObjectReader r(j, ptr);
    const std::string family = r.string("family");
    auto build = [&]() -> KernelModel {
        if (family == "brownian") {
            return KernelModel::brownian();
        }
        if (family == "shear") {
            return KernelModel::shear();
        }
        if (family == "product-form") {
            const double a = r.number("alpha");
            const double b = r.number("beta");
            return wrap_model_error(ptr, [&] { return KernelModel::product_form(a, b); });
        }
        if (family == "constant-monomer") {
            const double A = r.number("A");
            return wrap_model_error(ptr + "/A", [&] { return KernelModel::constant_monomer(A); });
        }
        if (family == "tabulated") {
            const json& v = r.raw("values");
            if (!v.is_array()) {
                throw ConfigError(r.ptr("values"), "expected an array of rows");
            }
            std::vector<std::vector<double>> table;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const std::string rp = r.ptr("values") + "/" + std::to_string(i);
                if (!v[i].is_array()) {
                    throw ConfigError(rp, "expected an array of numbers");
                }
                std::vector<double> row;
                for (std::size_t jx = 0; jx < v[i].size(); ++jx) {
                    if (!v[i][jx].is_number()) {
                        throw ConfigError(rp + "/" + std::to_string(jx), "expected a number");
                    }
                    row.push_back(v[i][jx].get<double>());
                }
                table.push_back(std::move(row));
            }
            ObjectReader e(r.raw("envelope"), r.ptr("envelope"));
            Envelope env{e.number("A_star"), e.number("alpha"), e.number("beta")};
            e.finish();
            return wrap_model_error(r.ptr("values"), [&] { return KernelModel::tabulated(std::move(table), env); });
        }
        throw ConfigError(r.ptr("family"), "unknown kernel family '" + family +
                                               "' (brownian, shear, product-form, constant-monomer, tabulated)");
    };
    KernelModel m = build();
    r.finish();
    return m;
}

inline RateModel parse_removal(const json& j, const std::string& ptr)
{
    ObjectReader r(j, ptr);
    const std::string family = r.string("family");
    auto build = [&]() -> RateModel {
        if (family == "power-law") {
            const double R = r.number("R");
            const double g = r.number("gamma");
            return wrap_model_error(ptr, [&] { return RateModel::power_law(R, g); });
        }
        if (family == "li-chen") {
            const double C = r.number("C");
            return wrap_model_error(r.ptr("C"), [&] { return RateModel::li_chen(C); });
        }
        if (family == "tabulated") {
            auto values = r.numbers("values");
            const double R = r.number("R_star");
            const double g = r.number("gamma");
            return wrap_model_error(r.ptr("values"), [&] { return RateModel::tabulated(values, R, g); });
        }
        throw ConfigError(r.ptr("family"),
                          "unknown removal family '" + family + "' (power-law, li-chen, tabulated)");
    };
    RateModel m = build();
    r.finish();
    return m;
}

inline SourceModel parse_source(const json& j, const std::string& ptr)
{
    ObjectReader r(j, ptr);
    const std::string family = r.string("family");
    auto build = [&]() -> SourceModel {
        if (family == "monomer-only") {
            const double s1 = r.number("s1");
            return wrap_model_error(r.ptr("s1"), [&] { return SourceModel::monomer_only(s1); });
        }
        if (family == "finite-support") {
            const json& v = r.raw("entries");
            if (!v.is_array()) {
                throw ConfigError(r.ptr("entries"), "expected an array of [k, s_k] pairs");
            }
            std::vector<std::pair<std::size_t, double>> entries;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const std::string ep = r.ptr("entries") + "/" + std::to_string(i);
                if (!v[i].is_array() || v[i].size() != 2 || !is_nonnegative_integer(v[i][0]) || !v[i][1].is_number()) {
                    throw ConfigError(ep, "expected a pair [k, s_k] with integer k >= 1");
                }
                entries.emplace_back(v[i][0].get<std::size_t>(), v[i][1].get<double>());
            }
            return wrap_model_error(r.ptr("entries"), [&] { return SourceModel::finite_support(entries); });
        }
        if (family == "geometric-decay") {
            const double s1 = r.number("s1");
            const double ratio = r.number("ratio");
            return wrap_model_error(ptr, [&] { return SourceModel::geometric_decay(s1, ratio); });
        }
        throw ConfigError(r.ptr("family"), "unknown source family '" + family +
                                               "' (monomer-only, finite-support, geometric-decay)");
    };
    SourceModel m = build();
    r.finish();
    return m;
}

inline InitialSpec parse_initial(const json& j, const std::string& ptr, const std::filesystem::path& base)
{
    ObjectReader r(j, ptr);
    InitialSpec spec;
    const std::string kind = r.string("kind");
    if (kind == "zero") {
        spec.kind = InitialKind::zero;
    } else if (kind == "monomer") {
        spec.kind = InitialKind::monomer;
        spec.m = r.number("m");
        if (!(spec.m >= 0.0)) {
            throw ConfigError(r.ptr("m"), "monomer density must be nonnegative");
        }
    } else if (kind == "tabulated") {
        spec.kind = InitialKind::tabulated;
        spec.values = r.numbers("values");
        for (std::size_t i = 0; i < spec.values.size(); ++i) {
            if (!(spec.values[i] >= 0.0)) {
                throw ConfigError(r.ptr("values") + "/" + std::to_string(i), "concentrations must be nonnegative");
            }
        }
    } else if (kind == "file") {
        spec.kind = InitialKind::file;
        std::filesystem::path p = r.string("path");
        spec.path = p.is_absolute() ? p : base / p;
    } else if (kind == "random") {
        spec.kind = InitialKind::random;
        spec.total_mass = r.number("total_mass", 1.0);
        spec.max_size = r.unsigned_integer("max_size", 0);
        if (!(spec.total_mass >= 0.0)) {
            throw ConfigError(r.ptr("total_mass"), "total mass must be nonnegative");
        }
    } else {
        throw ConfigError(r.ptr("kind"), "unknown initial kind '" + kind + "' (zero, monomer, tabulated, file, random)");
    }
    r.finish();
    return spec;
}

inline IntegratorConfig parse_integrator(const json& j, const std::string& ptr)
{
    ObjectReader r(j, ptr);
    IntegratorConfig cfg;
    cfg.rel_tol = r.number("rel_tol", cfg.rel_tol);
    cfg.abs_tol = r.number("abs_tol", cfg.abs_tol);
    cfg.max_step = r.number("max_step", cfg.max_step);
    cfg.negativity_floor = r.number("negativity_floor", cfg.negativity_floor);
    cfg.t_end = r.number("t_end", 10.0);
    cfg.max_steps = r.unsigned_integer("max_steps", cfg.max_steps);
    if (r.has("sample_times") && r.has("samples")) {
        throw ConfigError(r.ptr("samples"), "give either samples or sample_times, not both");
    }
    if (r.has("sample_times")) {
        cfg.sample_times = r.numbers("sample_times");
    } else {
        const auto count = r.unsigned_integer("samples", 101);
        if (count < 2) {
            throw ConfigError(r.ptr("samples"), "need at least 2 samples");
        }
        cfg.sample_times = linspace(0.0, cfg.t_end, count);
    }
    r.finish();
    wrap_model_error(ptr, [&] { cfg.validate(); return 0; });
    return cfg;
}

inline ExampleParams parse_example(const json& j, const std::string& ptr, std::size_t& n)
{
    ObjectReader r(j, ptr);
    ExampleParams p = ExampleParams::standard();
    p.A_star = r.number("A_star", p.A_star);
    p.R_star = r.number("R_star", p.R_star);
    p.gamma = r.number("gamma", p.gamma);
    if (r.has("s")) {
        p.s = r.numbers("s");
    }
    if (r.has("c_in")) {
        p.c_in = r.numbers("c_in");
    }
    n = r.unsigned_integer("N", n);
    r.finish();
    wrap_model_error(ptr, [&] { p.validate(); return 0; });
    if (n < 3) {
        throw ConfigError(ptr + "/N", "the example check needs N >= 3");
    }
    return p;
}

inline void check_assumptions(RunConfig& cfg)
{
    if (!cfg.kernel || !cfg.removal) {
        return;
    }
    const Envelope& env = cfg.kernel->envelope();
    std::ostringstream os;
    if (!env.admissible()) {
        os << "kernel envelope (A*=" << env.A_star << ", alpha=" << env.alpha << ", beta=" << env.beta
           << ") is outside 0 <= alpha <= beta <= 1, A* > 0";
        cfg.warnings.push_back(os.str());
        os.str("");
    }
    if (!(cfg.removal->R_star() > 0.0)) {
        cfg.warnings.push_back("removal lower bound R* is not positive");
    }
    const double g = cfg.removal->gamma();
    if (!(g > std::max(0.0, env.alpha + env.beta - 1.0))) {
        os << "gamma=" << g << " does not exceed max{0, alpha+beta-1}=" << std::max(0.0, env.alpha + env.beta - 1.0);
        cfg.warnings.push_back(os.str());
        os.str("");
    }
    if (cfg.kernel->family() == KernelFamily::tabulated && cfg.N && *cfg.N >= 2) {
        try {
            fit_envelope(*cfg.kernel, *cfg.N);
        } catch (const CertificationError& e) {
            cfg.warnings.push_back(e.what());
        }
    }
}

} // namespace detail

inline RunConfig parse_config(const json& j, const std::filesystem::path& base_dir = {})
{
    detail::ObjectReader r(j, "");
    RunConfig cfg;
    cfg.base_dir = base_dir;
    {
        const json& v = r.raw("schema");
        if (!v.is_number_integer() || v.get<long long>() != config_schema_version) {
            throw ConfigError("/schema", "unsupported schema version (expected " +
                                             std::to_string(config_schema_version) + ")");
        }
    }
    if (r.has("N")) {
        const auto n = r.unsigned_integer("N");
        if (n == 0) {
            throw ConfigError("/N", "truncation size must be positive");
        }
        cfg.N = static_cast<std::size_t>(n);
    }
    if (r.has("kernel")) {
        cfg.kernel = detail::parse_kernel(r.raw("kernel"), "/kernel");
    }
    if (r.has("removal")) {
        cfg.removal = detail::parse_removal(r.raw("removal"), "/removal");
    }
    if (r.has("source")) {
        cfg.source = detail::parse_source(r.raw("source"), "/source");
    }
    if (r.has("initial")) {
        cfg.initial = detail::parse_initial(r.raw("initial"), "/initial", base_dir);
    }
    if (r.has("integrator")) {
        cfg.integrator = detail::parse_integrator(r.raw("integrator"), "/integrator");
    } else {
        cfg.integrator = detail::parse_integrator(json::object(), "/integrator");
    }
    if (r.has("diagnostics")) {
        detail::ObjectReader d(r.raw("diagnostics"), "/diagnostics");
        if (d.has("mu")) {
            cfg.mu_list = d.numbers("mu");
            for (std::size_t i = 0; i < cfg.mu_list.size(); ++i) {
                if (!(cfg.mu_list[i] >= 0.0)) {
                    throw ConfigError("/diagnostics/mu/" + std::to_string(i), "moment orders must be nonnegative");
                }
            }
        }
        if (d.has("smallness_mu")) {
            cfg.smallness_mu = d.number("smallness_mu");
        }
        d.finish();
    }
    if (r.has("equilibrium")) {
        detail::ObjectReader e(r.raw("equilibrium"), "/equilibrium");
        cfg.equilibrium.tol = e.number("tol", cfg.equilibrium.tol);
        cfg.equilibrium.max_iter = e.unsigned_integer("max_iter", cfg.equilibrium.max_iter);
        cfg.equilibrium.damping = e.number("damping", cfg.equilibrium.damping);
        e.finish();
        if (!(cfg.equilibrium.tol > 0.0)) {
            throw ConfigError("/equilibrium/tol", "tolerance must be positive");
        }
        if (!(cfg.equilibrium.damping > 0.0 && cfg.equilibrium.damping <= 1.0)) {
            throw ConfigError("/equilibrium/damping", "damping must lie in (0, 1]");
        }
    }
    if (r.has("example")) {
        cfg.example = detail::parse_example(r.raw("example"), "/example", cfg.example_N);
    }
    if (r.has("output")) {
        detail::ObjectReader o(r.raw("output"), "/output");
        cfg.out_dir = o.string("dir", cfg.out_dir);
        const std::string fmt = o.string("format", "long");
        if (fmt == "long") {
            cfg.format = io::TrajectoryFormat::long_format;
        } else if (fmt == "wide") {
            cfg.format = io::TrajectoryFormat::wide_format;
        } else {
            throw ConfigError("/output/format", "expected 'long' or 'wide'");
        }
        o.finish();
    }
    cfg.seed = r.unsigned_integer("seed", 0);
    r.finish();
    detail::check_assumptions(cfg);
    return cfg;
}

/// Parses JSON text, translating syntax errors into line/column diagnostics.
inline json parse_json_text(const std::string& text, const std::string& origin = "config")
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t stop = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        std::ostringstream os;
        os << origin << ":" << line << ":" << col << ": JSON syntax error: " << e.what();
        throw ConfigSyntaxError(os.str(), line, col);
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("", "cannot open " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    const json j = parse_json_text(read_text_file(path), path.string());
    return parse_config(j, path.parent_path());
}

} // namespace smol
