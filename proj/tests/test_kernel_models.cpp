#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "smol/error.hpp"
#include "smol/kernels.hpp"

using Catch::Matchers::WithinRel;
using Catch::Matchers::WithinAbs;
using namespace smol;

namespace {

std::vector<KernelModel> builtin_kernels()
{
    return {KernelModel::brownian(), KernelModel::shear(), KernelModel::product_form(0.0, 1.0),
            KernelModel::product_form(0.5, 0.25), KernelModel::constant_monomer(3.0)};
}

} // namespace

TEST_CASE("brownian kernel values", "[kernels]")
{
    const auto K = KernelModel::brownian();
    // (k^{1/3} + l^{1/3})(k^{-1/3} + l^{-1/3})
    CHECK_THAT(K(1, 1), WithinRel(4.0, 1e-15));
    CHECK_THAT(K(1, 8), WithinRel(3.0 * 1.5, 1e-15));
    CHECK_THAT(K(27, 8), WithinRel(5.0 * (1.0 / 3.0 + 0.5), 1e-15));
}

TEST_CASE("shear kernel values", "[kernels]")
{
    const auto K = KernelModel::shear();
    CHECK_THAT(K(1, 1), WithinRel(8.0, 1e-15));
    CHECK_THAT(K(1, 8), WithinRel(27.0, 1e-15));
    CHECK_THAT(K(27, 64), WithinRel(343.0, 1e-14));
}

TEST_CASE("constant-monomer kernel is zero off the (1,1) entry", "[kernels]")
{
    const auto K = KernelModel::constant_monomer(2.5);
    CHECK(K(1, 1) == 2.5);
    CHECK(K(2, 3) == 0.0);
    CHECK(K(1, 2) == 0.0);
    CHECK(K(7, 1) == 0.0);
}

TEST_CASE("product-form kernel", "[kernels]")
{
    const auto K = KernelModel::product_form(1.0, 0.0);
    CHECK_THAT(K(3, 5), WithinRel(8.0, 1e-15));
    CHECK(K.envelope().alpha == 0.0);
    CHECK(K.envelope().beta == 1.0);
    CHECK_THROWS_AS(KernelModel::product_form(-0.1, 0.5), ParameterError);
}

TEST_CASE("index zero is rejected", "[kernels]")
{
    CHECK_THROWS_AS(KernelModel::brownian()(0, 1), IndexError);
    CHECK_THROWS_AS(RateModel::power_law(1.0, 1.0)(0), IndexError);
}

TEST_CASE("tabulated kernel", "[kernels]")
{
    std::vector<std::vector<double>> t{{1.0, 2.0}, {2.0, 0.5}};
    const auto K = KernelModel::tabulated(t, {1.0, 0.0, 1.0});
    CHECK(K(1, 2) == 2.0);
    CHECK(K(2, 2) == 0.5);
    CHECK_THROWS_AS(K(3, 1), IndexError);
    CHECK_THROWS_AS(KernelModel::tabulated({{1.0, 2.0}, {1.0, 1.0}}, {1.0, 0.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(KernelModel::tabulated({{-1.0}}, {1.0, 0.0, 0.0}), ParameterError);
    CHECK_THROWS_AS(KernelModel::tabulated({{1.0}}, {0.0, 0.0, 0.0}), ParameterError);
}

TEST_CASE("kernels are symmetric bitwise on a grid", "[kernels][property]")
{
    for (const auto& K : builtin_kernels()) {
        for (std::size_t k = 1; k <= 1000; k += 7) {
            for (std::size_t l = 1; l <= 1000; l += 11) {
                REQUIRE(K(k, l) == K(l, k));
                REQUIRE(K(k, l) >= 0.0);
            }
        }
    }
}

TEST_CASE("shipped envelopes hold on a brute-force scan", "[kernels][property]")
{
    for (const auto& K : builtin_kernels()) {
        INFO(K.name());
        const auto cert = fit_envelope(K, 512);
        CHECK(cert.max_ratio <= K.envelope().A_star * (1.0 + 1e-12));
    }
    // The brownian ratio attains A* = 2 on the diagonal.
    const auto cert = fit_envelope(KernelModel::brownian(), 512);
    CHECK_THAT(cert.max_ratio, WithinRel(2.0, 1e-12));
}

TEST_CASE("envelope violation names the offending pair", "[kernels]")
{
    std::vector<std::vector<double>> t{{1.0, 1.0, 1.0}, {1.0, 1.0, 9.0}, {1.0, 9.0, 1.0}};
    const auto K = KernelModel::tabulated(t, {1.0, 0.0, 0.0});
    try {
        fit_envelope(K, 3);
        FAIL("expected a certification failure");
    } catch (const CertificationError& e) {
        CHECK(e.k() == 3);
        CHECK(e.l() == 2);
    }
    CHECK_THROWS_AS(fit_envelope(KernelModel::brownian(), 1), ParameterError);
}

TEST_CASE("removal rates", "[kernels]")
{
    CHECK(RateModel::power_law(1.0, 1.0)(3) == 3.0);
    CHECK_THAT(RateModel::power_law(2.0, 2.0 / 3.0)(8), WithinRel(8.0, 1e-14));
    // independent 30-digit evaluation of the Li-Chen formula at k = 1
    CHECK_THAT(RateModel::li_chen(1.0)(1), WithinRel(1.08400000147531948762, 1e-15));
    const auto lc = RateModel::li_chen(2.0);
    CHECK(lc.R_star() == 2.0);
    CHECK_THAT(lc.gamma(), WithinRel(2.0 / 3.0, 1e-15));
}

TEST_CASE("removal rates dominate R* k^gamma", "[kernels][property]")
{
    const std::vector<RateModel> models{RateModel::power_law(1.0, 0.5), RateModel::power_law(3.0, 1.0),
                                        RateModel::li_chen(1.0), RateModel::li_chen(0.25)};
    for (const auto& r : models) {
        for (std::size_t k = 1; k <= 1000; ++k) {
            REQUIRE(r(k) > 0.0);
            REQUIRE(r(k) >= r.R_star() * std::pow(static_cast<double>(k), r.gamma()) * (1.0 - 1e-14));
        }
    }
    CHECK_THROWS_AS(RateModel::tabulated({1.0, 1.0}, 1.0, 1.0), ParameterError);
    const auto tab = RateModel::tabulated({1.0, 2.5}, 1.0, 1.0);
    CHECK(tab(2) == 2.5);
    CHECK_THROWS_AS(tab(3), IndexError);
}

TEST_CASE("source moments", "[kernels]")
{
    CHECK(SourceModel::monomer_only(1.0).moment(5.0) == 1.0);
    CHECK(SourceModel::finite_support({{1, 1.0}, {2, 0.5}}).moment(1.0) == 2.0);
    CHECK(SourceModel::finite_support({}).moment(3.0) == 0.0);
    CHECK(SourceModel::finite_support({}).is_zero());

    // sum_k k^mu s1 r^{k-1} against a long direct sum
    const auto g = SourceModel::geometric_decay(0.3, 0.5);
    for (double mu : {0.0, 1.0, 2.0, 2.5}) {
        long double direct = 0.0L;
        for (int k = 1; k <= 400; ++k) {
            direct += std::pow(static_cast<long double>(k), mu) * 0.3L * std::pow(0.5L, k - 1);
        }
        INFO("mu = " << mu);
        CHECK_THAT(g.moment(mu), WithinRel(static_cast<double>(direct), 1e-12));
    }
    CHECK_THROWS_AS(SourceModel::monomer_only(-1.0), ParameterError);
    CHECK_THROWS_AS(SourceModel::geometric_decay(1.0, 1.0), ParameterError);
}

TEST_CASE("source moments are nondecreasing in mu", "[kernels][property]")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> kk(1, 40);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<std::size_t, double> picked;
        for (int i = 0; i < 5; ++i) {
            picked[kk(rng)] = u(rng);
        }
        const std::vector<std::pair<std::size_t, double>> e(picked.begin(), picked.end());
        const auto s = SourceModel::finite_support(e);
        double prev = s.moment(0.0);
        for (double mu = 0.25; mu <= 4.0; mu += 0.25) {
            const double m = s.moment(mu);
            REQUIRE(m >= prev);
            prev = m;
        }
    }
}
