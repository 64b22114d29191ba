#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/moments.hpp"
#include "smol/system.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace smol;

namespace {

CoagulationSystem monomer_example(std::size_t n, std::vector<std::pair<std::size_t, double>> s = {{1, 1.0}, {2, 0.5}})
{
    return CoagulationSystem(KernelModel::constant_monomer(1.0), RateModel::power_law(1.0, 1.0),
                             SourceModel::finite_support(s), n);
}

// Riccati solution of c' = -c^2 + 1 - c from c(0) = 0, derived by hand:
// (c - Q+)/(c - Q-) = (Q+/Q-) e^{-sqrt5 t}.
double riccati_from_zero(double t)
{
    const double qp = (std::sqrt(5.0) - 1.0) / 2.0;
    const double qm = -(std::sqrt(5.0) + 1.0) / 2.0;
    const double e = std::exp(-std::sqrt(5.0) * t);
    return qp * (1.0 - e) / (1.0 - (qp / qm) * e);
}

// Direct double-sum evaluation of the truncated right-hand side.
std::vector<long double> brute_rhs(const CoagulationSystem& sys, const std::vector<double>& c)
{
    const std::size_t n = c.size();
    std::vector<long double> f(n, 0.0L);
    for (std::size_t k = 1; k <= n; ++k) {
        long double gain = 0.0L, loss = 0.0L;
        for (std::size_t l = 1; l < k; ++l) {
            gain += static_cast<long double>(sys.kernel_model()(k - l, l)) * c[k - l - 1] * c[l - 1];
        }
        for (std::size_t l = 1; l + k <= n; ++l) {
            loss += static_cast<long double>(sys.kernel_model()(k, l)) * c[l - 1];
        }
        f[k - 1] = 0.5L * gain - c[k - 1] * loss + sys.source(k) - static_cast<long double>(sys.removal(k)) * c[k - 1];
    }
    return f;
}

CoagulationSystem random_system(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<int> pick(0, 2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    KernelModel K = KernelModel::brownian();
    switch (pick(rng)) {
    case 1: K = KernelModel::shear(); break;
    case 2: K = KernelModel::product_form(0.5 * u(rng), 0.5 + 0.5 * u(rng)); break;
    default: break;
    }
    const double gammas[] = {0.5, 2.0 / 3.0, 1.0};
    std::uniform_int_distribution<std::size_t> kk(2, n);
    std::vector<std::pair<std::size_t, double>> s{{1, u(rng)}, {kk(rng), u(rng)}};
    return CoagulationSystem(K, RateModel::power_law(0.5 + u(rng), gammas[pick(rng)]), SourceModel::finite_support(s), n);
}

std::vector<double> random_state(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> c(n);
    for (std::size_t k = 0; k < n; ++k) {
        c[k] = u(rng) / static_cast<double>((k + 1) * (k + 1));
    }
    return c;
}

} // namespace

TEST_CASE("rhs of the zero state without source vanishes", "[rhs]")
{
    const CoagulationSystem sys(KernelModel::brownian(), RateModel::power_law(1.0, 0.5),
                                SourceModel::finite_support({}), 20);
    for (double v : sys.rhs(StateVector(20, 0.0))) {
        CHECK(v == 0.0);
    }
}

TEST_CASE("rhs of the monomer example by hand", "[rhs]")
{
    StateVector c(4, 0.0);
    c[1] = 1.0;
    const auto f = rhs(KernelModel::constant_monomer(1.0), RateModel::power_law(1.0, 1.0),
                       SourceModel::finite_support({{1, 1.0}, {2, 0.5}}), c);
    REQUIRE(f.size() == 4);
    CHECK(f[0] == -1.0);
    CHECK(f[1] == 1.0);
    CHECK(f[2] == 0.0);
    CHECK(f[3] == 0.0);
}

TEST_CASE("rhs agrees with a direct double sum", "[rhs][property]")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const auto sys = random_system(rng, 40);
        const auto c = random_state(rng, 40);
        std::vector<double> f(40);
        sys.rhs(c, f);
        const auto want = brute_rhs(sys, c);
        for (std::size_t k = 0; k < 40; ++k) {
            REQUIRE_THAT(f[k], WithinAbs(static_cast<double>(want[k]), 1e-13 * (1.0 + std::abs(static_cast<double>(want[k])))));
        }
    }
}

TEST_CASE("rhs rejects mismatched lengths", "[rhs]")
{
    const auto sys = monomer_example(4);
    std::vector<double> c(3), f(4);
    CHECK_THROWS_AS(sys.rhs(c, f), DimensionError);
    CHECK_THROWS_AS(CoagulationSystem(KernelModel::brownian(), RateModel::power_law(1.0, 1.0),
                                      SourceModel::monomer_only(1.0), 0),
                    ParameterError);
}

TEST_CASE("quasi-positivity on boundary states", "[rhs][property]")
{
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<std::size_t> pick(0, 31);
    for (int trial = 0; trial < 200; ++trial) {
        const auto sys = random_system(rng, 32);
        auto c = random_state(rng, 32);
        const std::size_t k = pick(rng);
        c[k] = 0.0;
        std::vector<double> f(32);
        sys.rhs(c, f);
        REQUIRE(f[k] >= 0.0);
    }
}

TEST_CASE("truncated first-moment identity", "[rhs][property]")
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sys = random_system(rng, 64);
        const auto c = random_state(rng, 64);
        std::vector<double> f(64);
        sys.rhs(c, f);
        CompensatedSum lhs;
        double scale = 0.0;
        for (std::size_t k = 1; k <= 64; ++k) {
            lhs += static_cast<double>(k) * f[k - 1];
            scale += static_cast<double>(k) * (std::abs(f[k - 1]) + sys.source(k) + sys.removal(k) * c[k - 1]);
        }
        REQUIRE(std::abs(lhs.value() - sys.mass_balance(c)) <= 1e-12 * scale);
    }
}

TEST_CASE("moments are ordered in mu", "[rhs][property]")
{
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = random_state(rng, 50);
        double prev = moment(c, 1.0);
        for (double mu = 1.25; mu <= 5.0; mu += 0.25) {
            const double m = moment(c, mu);
            REQUIRE(m >= prev);
            prev = m;
        }
    }
}

TEST_CASE("weak form with phi_k = k on the monomer example", "[weak]")
{
    const auto sys = monomer_example(8);
    StateVector c(std::vector<double>{0.7, 0.3, 0.2, 0.1, 0.05, 0.0, 0.01, 0.0}, 0.0);
    std::vector<double> phi(8);
    for (std::size_t k = 1; k <= 8; ++k) {
        phi[k - 1] = static_cast<double>(k);
    }
    const auto w = weak_form_residual(sys, c, phi);
    CHECK(w.residual <= 1e-12);
    CHECK_THAT(w.paired, WithinAbs(sys.mass_balance(c.c), 1e-13));

    const auto z = weak_form_residual(sys, c, std::vector<double>(8, 0.0));
    CHECK(z.residual == 0.0);
}

TEST_CASE("weak form residual with random test sequences", "[weak][property]")
{
    std::mt19937_64 rng(15);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const auto sys = random_system(rng, 32);
        const StateVector c(random_state(rng, 32), 0.0);
        std::vector<double> phi(32);
        for (auto& v : phi) {
            v = g(rng);
        }
        const auto w = weak_form_residual(sys, c, phi);
        REQUIRE(w.relative() <= 1e-10);

        // independent evaluation of sum phi_k rhs_k
        const auto f = brute_rhs(sys, c.c);
        long double paired = 0.0L;
        for (std::size_t k = 0; k < 32; ++k) {
            paired += phi[k] * f[k];
        }
        REQUIRE(std::abs(w.paired - static_cast<double>(paired)) <= 1e-12 * w.scale + 1e-15);
    }
}

TEST_CASE("zero data stays zero", "[integrate]")
{
    IntegratorConfig cfg;
    cfg.t_end = 10.0;
    cfg.sample_times = linspace(0.0, 10.0, 11);
    const auto traj = integrate(KernelModel::shear(), RateModel::power_law(1.0, 1.0), SourceModel::finite_support({}),
                                StateVector(16, 0.0), cfg);
    REQUIRE(traj.size() == 11);
    for (const auto& s : traj.samples) {
        for (double v : s.c) {
            REQUIRE(v == 0.0);
        }
    }
}

TEST_CASE("monomer Riccati component against its closed form", "[integrate]")
{
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-10;
    cfg.abs_tol = 1e-13;
    cfg.t_end = 1.0;
    const auto traj = integrate(monomer_example(8, {{1, 1.0}}), StateVector(8, 0.0), cfg);
    REQUIRE(traj.size() == 1);
    CHECK(traj.back().t == 1.0);
    CHECK_THAT(traj.back()[1], WithinRel(riccati_from_zero(1.0), 1e-10 * 100));
}

TEST_CASE("pure coagulation conserves truncated mass", "[integrate]")
{
    const CoagulationSystem sys(KernelModel::brownian(), RateModel::power_law(0.0, 1.0),
                                SourceModel::finite_support({}), 64);
    StateVector c0(64, 0.0);
    c0[1] = 1.0;
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-14;
    cfg.t_end = 5.0;
    cfg.sample_times = linspace(0.0, 5.0, 51);
    const auto traj = integrate(sys, c0, cfg);
    for (const auto& s : traj.samples) {
        REQUIRE_THAT(moment(s, 1.0), WithinAbs(1.0, 1e-10));
    }
    // mass has moved to larger clusters
    CHECK(traj.back()[1] < 0.5);
}

TEST_CASE("samples land on the requested times and stay nonnegative", "[integrate]")
{
    std::mt19937_64 rng(16);
    const auto sys = random_system(rng, 48);
    IntegratorConfig cfg;
    cfg.t_end = 3.0;
    cfg.sample_times = {0.0, 0.1, 0.5, 1.7, 3.0};
    const auto traj = integrate(sys, StateVector(48, 0.0), cfg);
    REQUIRE(traj.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(traj.samples[i].t == cfg.sample_times[i]);
        CHECK(traj.samples[i].valid());
    }
    CHECK(traj.stats.accepted > 0);
}

TEST_CASE("tightening tolerances reduces the error", "[integrate]")
{
    double prev = 1.0;
    for (double tol : {1e-5, 1e-7, 1e-9, 1e-11}) {
        IntegratorConfig cfg;
        cfg.rel_tol = tol;
        cfg.abs_tol = tol * 1e-2;
        cfg.t_end = 2.0;
        const auto traj = integrate(monomer_example(4, {{1, 1.0}}), StateVector(4, 0.0), cfg);
        const double err = std::abs(traj.back()[1] - riccati_from_zero(2.0));
        INFO("tol " << tol << " error " << err);
        CHECK(err <= 100.0 * tol);
        CHECK(err < prev);
        prev = err;
    }
}

TEST_CASE("step budget exhaustion raises a stiffness failure", "[integrate]")
{
    const CoagulationSystem sys(KernelModel::brownian(), RateModel::power_law(1e9, 1.0),
                                SourceModel::monomer_only(1.0), 8);
    IntegratorConfig cfg;
    cfg.t_end = 1.0;
    cfg.max_steps = 200;
    StateVector c0(8, 0.0);
    c0[8] = 1.0;
    try {
        integrate(sys, c0, cfg);
        FAIL("expected a stiffness failure");
    } catch (const StiffnessError& e) {
        CHECK(e.t() < 1.0);
        CHECK(e.component() >= 1);
        CHECK(e.component() <= 8);
    }
}

TEST_CASE("integrator configuration is validated", "[integrate]")
{
    const auto sys = monomer_example(4);
    IntegratorConfig cfg;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(integrate(sys, StateVector(4, 0.0), cfg), ParameterError);
    cfg = {};
    cfg.sample_times = {0.5, 0.2};
    CHECK_THROWS_AS(integrate(sys, StateVector(4, 0.0), cfg), ParameterError);
    cfg = {};
    cfg.sample_times = {2.0};
    CHECK_THROWS_AS(integrate(sys, StateVector(4, 0.0), cfg), ParameterError);
    cfg = {};
    CHECK_THROWS_AS(integrate(sys, StateVector(3, 0.0), cfg), DimensionError);
    StateVector bad(4, 0.0);
    bad[2] = -1.0;
    CHECK_THROWS_AS(integrate(sys, bad, cfg), ParameterError);
}
