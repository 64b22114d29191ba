#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "smol/analytic.hpp"
#include "smol/contraction.hpp"
#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/verify.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using namespace smol;

namespace {

// Classical RK4 on c1' = -A c1^2 + s1 - r1 c1 with a fixed fine step.
double rk4_c1(double A, double r1, double s1, double c0, double t, int steps = 20000)
{
    auto f = [&](double c) { return -A * c * c + s1 - r1 * c; };
    const double h = t / steps;
    double c = c0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(c);
        const double k2 = f(c + 0.5 * h * k1);
        const double k3 = f(c + 0.5 * h * k2);
        const double k4 = f(c + h * k3);
        c += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return c;
}

// Composite Simpson rule for the c2 forcing using the RK4 oracle for c1.
double simpson_c2(const ExampleParams& p, double t, int panels = 2000)
{
    const double r2 = p.removal(2);
    const double h = t / panels;
    std::vector<double> c1(panels + 1);
    c1[0] = p.initial(1);
    for (int i = 1; i <= panels; ++i) {
        c1[i] = rk4_c1(p.A_star, p.removal(1), p.source(1), c1[i - 1], h, 20);
    }
    double acc = 0.0;
    for (int i = 0; i <= panels; ++i) {
        const double s = i * h;
        const double w = (i == 0 || i == panels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * 0.5 * p.A_star * c1[i] * c1[i] * std::exp(-r2 * (t - s));
    }
    return p.initial(2) * std::exp(-r2 * t) + p.source(2) / r2 * (1.0 - std::exp(-r2 * t)) + acc * h / 3.0;
}

} // namespace

TEST_CASE("exact equilibrium of the standard parameters", "[analytic]")
{
    const auto q = exact_equilibrium(ExampleParams::standard(), 6);
    CHECK_THAT(q[0], WithinRel((std::sqrt(5.0) - 1.0) / 2.0, 1e-15));
    CHECK_THAT(q[1], WithinRel((3.0 - std::sqrt(5.0)) / 8.0 + 0.25, 1e-15));
    for (std::size_t k = 3; k <= 6; ++k) {
        CHECK(q[k - 1] == 0.0);
    }
}

TEST_CASE("exact equilibrium degenerate sources", "[analytic]")
{
    ExampleParams p = ExampleParams::standard();
    p.s = {0.0, 0.6};
    const auto q = exact_equilibrium(p, 3);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 0.3);
    p.s = {};
    for (double v : exact_equilibrium(p, 5)) {
        CHECK(v == 0.0);
    }
    p.s = {1.0, 0.0, 0.9};
    CHECK_THAT(exact_equilibrium(p, 3)[2], WithinRel(0.3, 1e-15));
}

TEST_CASE("Riccati constants", "[analytic]")
{
    const auto rc = riccati_constants(ExampleParams::standard());
    CHECK_THAT(rc.Q1_plus, WithinRel((std::sqrt(5.0) - 1.0) / 2.0, 1e-15));
    CHECK_THAT(rc.Q1_minus, WithinRel(-(std::sqrt(5.0) + 1.0) / 2.0, 1e-15));
    CHECK_THAT(rc.alpha_ric, WithinRel(1.0 / std::sqrt(5.0), 1e-15));
    CHECK_THAT(rc.alpha_ric, WithinRel(1.0 / (rc.Q1_plus - rc.Q1_minus), 1e-15));
    ExampleParams p = ExampleParams::standard();
    p.A_star = 0.0;
    CHECK_THROWS_AS(riccati_constants(p), ParameterError);
}

TEST_CASE("exact c1", "[analytic]")
{
    ExampleParams p = ExampleParams::standard();
    p.c_in = {0.3};
    CHECK(exact_c1(p, 0.0) == 0.3);
    p.c_in = {exact_equilibrium(p, 1)[0]};
    for (double t : {0.1, 1.0, 50.0}) {
        CHECK_THAT(exact_c1(p, t), WithinRel(p.c_in[0], 1e-15));
    }
    p.c_in = {};
    p.s = {1.0};
    CHECK_THAT(exact_c1(p, 1.0), WithinAbs(rk4_c1(1.0, 1.0, 1.0, 0.0, 1.0), 1e-10));
    CHECK_THAT(exact_c1(p, 100.0), WithinRel(exact_equilibrium(p, 1)[0], 1e-15));
}

TEST_CASE("exact c1 matches a scalar integration over [0, 10]", "[analytic][property]")
{
    for (double c0 : {0.0, 0.5, 3.0}) {
        ExampleParams p = ExampleParams::standard();
        p.c_in = {c0};
        for (double t = 0.5; t <= 10.0; t += 0.5) {
            REQUIRE_THAT(exact_c1(p, t), WithinAbs(rk4_c1(1.0, 1.0, 1.0, c0, t), 1e-10));
        }
    }
}

TEST_CASE("exact c2", "[analytic]")
{
    ExampleParams p = ExampleParams::standard();
    p.c_in = {0.2, 0.7};
    CHECK(exact_c2(p, 0.0) == 0.7);

    p.A_star = 0.0;
    const double r2 = 2.0;
    const double t = 1.3;
    CHECK_THAT(exact_c2(p, t), WithinRel(0.7 * std::exp(-r2 * t) + 0.5 / r2 * (1.0 - std::exp(-r2 * t)), 1e-15));

    p = ExampleParams::standard();
    CHECK_THAT(exact_c2(p, 2.0), WithinRel(simpson_c2(p, 2.0), 1e-10));
    CHECK_THROWS_AS(exact_c2(p, -1.0), DomainError);
    CHECK_THROWS_AS(exact_c2(p, 1.0, 0.0), ParameterError);
}

TEST_CASE("exact c2 against a full simulation", "[analytic]")
{
    const ExampleParams p = ExampleParams::standard();
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    cfg.t_end = 2.0;
    const auto traj = integrate(p.system(8), p.initial_state(8), cfg);
    CHECK_THAT(traj.back()[2], WithinRel(exact_c2(p, 2.0), 1e-7));
}

TEST_CASE("exact ck", "[analytic]")
{
    ExampleParams p = ExampleParams::standard();
    p.c_in = {0.0, 0.0, 1.0};
    CHECK_THAT(exact_ck(p, 3, 1.0), WithinRel(std::exp(-3.0), 1e-15));
    p.s = {1.0, 0.5, 0.6, 0.8};
    CHECK_THAT(exact_ck(p, 4, 200.0), WithinRel(0.2, 1e-15));
    p.c_in = {0.0, 0.0, 0.2};
    CHECK_THAT(exact_ck(p, 3, 0.7), WithinRel(0.2, 1e-15));
    CHECK_THROWS_AS(exact_ck(p, 2, 1.0), IndexError);
}

TEST_CASE("example decay rate", "[analytic]")
{
    ExampleParams p = ExampleParams::standard();
    CHECK(example_decay_rate(p) == 1.0);
    p.A_star = 1e8;
    CHECK(example_decay_rate(p) == std::min(1.0, 1.5));
    p = ExampleParams::standard();
    p.gamma = 1e-12;
    p.A_star = 1e6;
    CHECK_THAT(example_decay_rate(p), WithinRel(0.5, 1e-9));
}

TEST_CASE("smallness gap demonstration", "[analytic]")
{
    ExampleParams p = ExampleParams::standard();
    p.s = {4.0};
    const auto g = smallness_gap_demo(p, 1.0);
    CHECK(g.bracket_lower == 8.0);
    // 2 (C_1 + 2) A* Q1 - R* with Q1 = (sqrt17 - 1)/2
    CHECK_THAT(g.bracket_lower_exact, WithinRel(3.0 * (std::sqrt(17.0) - 1.0) - 1.0, 1e-14));
    CHECK(g.bracket_lower_exact >= g.bracket_lower);
    CHECK(g.decay_rate == 1.0);

    ExampleParams more = p;
    more.s = {9.0};
    CHECK(smallness_gap_demo(more, 1.0).bracket_lower_exact > g.bracket_lower_exact);

    ExampleParams scaled = p;
    scaled.A_star = 2.0;
    scaled.s = {8.0};
    scaled.R_star = 2.0;
    CHECK(smallness_gap_demo(scaled, 1.0).bracket_lower > 0.0);

    p.s = {3.9};
    CHECK_THROWS_AS(smallness_gap_demo(p, 1.0), ParameterError);
}

TEST_CASE("example cross-validation suite", "[analytic][verify]")
{
    for (const auto& c : verify_example(ExampleParams::standard())) {
        INFO(c.name << ": " << c.value << " vs " << c.threshold << " (" << c.detail << ")");
        CHECK(c.pass);
    }
    ExampleCheckOptions loose;
    loose.rel_tol = 1e-2;
    loose.abs_tol = 1e-2;
    bool any_fail = false;
    for (const auto& c : verify_example(ExampleParams::standard(), loose)) {
        any_fail = any_fail || !c.pass;
    }
    CHECK(any_fail);
}

TEST_CASE("weighted distance decays at the explicit rate from t = 1", "[analytic]")
{
    const ExampleParams p = ExampleParams::standard();
    IntegratorConfig cfg;
    cfg.rel_tol = 1e-11;
    cfg.abs_tol = 1e-13;
    cfg.t_end = 10.0;
    cfg.sample_times = linspace(0.0, 10.0, 201);
    const auto traj = integrate(p.system(16), p.initial_state(16), cfg);
    const StateVector Q(exact_equilibrium(p, 16), 0.0);
    const double kappa = example_decay_rate(p);
    for (double mu : {1.0, 2.0}) {
        // K fitted on [1, 5], then the bound is checked forward on (5, 10]
        double K = 0.0;
        for (const auto& s : traj.samples) {
            if (s.t >= 1.0 && s.t <= 5.0) {
                K = std::max(K, pairwise_distance(s, Q, mu) * std::exp(kappa * s.t));
            }
        }
        REQUIRE(K > 0.0);
        for (const auto& s : traj.samples) {
            if (s.t > 5.0) {
                REQUIRE(pairwise_distance(s, Q, mu) <= K * std::exp(-kappa * s.t));
            }
        }
    }
}
