#include <doctest.h>

#include <cmath>
#include <numbers>

#include "factorlens/errors.hpp"
#include "factorlens/special.hpp"
#include "support.hpp"

using namespace factorlens;
using namespace factorlens::special;

TEST_CASE("ln_gamma") {
    CHECK(ln_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-14));
    CHECK(ln_gamma(0.5) == doctest::Approx(0.5 * std::log(std::numbers::pi)).epsilon(1e-14));
    CHECK(ln_gamma(1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(ln_gamma(0.0), DomainError);
    CHECK_THROWS_AS(ln_gamma(-1.5), DomainError);
}

TEST_CASE("gauss_2f1 closed forms") {
    // 2F1(1,1;2;z) = -ln(1-z)/z
    CHECK(gauss_2f1(1, 1, 2, 0.5) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(gauss_2f1(1, 1, 2, 0.9) == doctest::Approx(-std::log(0.1) / 0.9).epsilon(1e-13));
    // 2F1(a,b;b;z) = (1-z)^{-a}
    CHECK(gauss_2f1(2.5, 3.0, 3.0, 0.3) == doctest::Approx(std::pow(0.7, -2.5)).epsilon(1e-14));
    // terminating polynomial
    const double b = 1.5, c = 2.5, z = 0.7;
    const double poly = 1.0 - 2.0 * b * z / c + b * (b + 1) * z * z / (c * (c + 1));
    CHECK(gauss_2f1(-2, b, c, z, HypergeometricTransform::none) == doctest::Approx(poly).epsilon(1e-14));
    CHECK(gauss_2f1(3, 4, 5, 0.0) == 1.0);
}

TEST_CASE("gauss_2f1 agrees with the naive series for moderate parameters") {
    const double params[][3] = {{0.5, 0.5, 1.5}, {5.5, 5.5, 0.5}, {10.5, 10.5, 9.5}, {3, 7, 2.5}};
    for (const auto& prm : params) {
        for (double z : {0.05, 0.2, 0.45, 0.6, 0.8}) {
            const double oracle = testsupport::naive_2f1(prm[0], prm[1], prm[2], z);
            CHECK(testsupport::rel_diff(gauss_2f1(prm[0], prm[1], prm[2], z), oracle) < 1e-11);
        }
    }
}

TEST_CASE("Euler transformation and direct series agree where both converge well") {
    const double params[][3] = {{5.5, 5.5, 0.5}, {30, 30, 9.5}, {60.5, 60.5, 2}, {0.5, 2.5, 1.5}};
    for (const auto& prm : params) {
        for (double z = 0.4; z <= 0.6001; z += 0.05) {
            const double direct = ln_gauss_2f1(prm[0], prm[1], prm[2], z, HypergeometricTransform::none);
            const double euler = ln_gauss_2f1(prm[0], prm[1], prm[2], z, HypergeometricTransform::euler);
            CHECK(std::abs(direct - euler) <= 1e-10 * std::max(1.0, std::abs(direct)));
        }
    }
}

TEST_CASE("ln_gauss_2f1 handles parameters whose value overflows a double") {
    // Value is astronomically large; only the log is representable.
    const double v = ln_gauss_2f1(400, 400, 50, 0.95);
    CHECK(std::isfinite(v));
    CHECK(v > 709.0);
    const double none = ln_gauss_2f1(400, 400, 50, 0.45, HypergeometricTransform::none);
    const double euler = ln_gauss_2f1(400, 400, 50, 0.45, HypergeometricTransform::euler);
    CHECK(std::abs(none - euler) <= 1e-10 * std::abs(none));
}

TEST_CASE("gauss_2f1 domain errors") {
    CHECK_THROWS_AS(gauss_2f1(1, 1, 2, -0.1), DomainError);
    CHECK_THROWS_AS(gauss_2f1(1, 1, 2, 1.0), DomainError);
    CHECK_THROWS_AS(gauss_2f1(1, 1, 0, 0.5), DomainError);
    CHECK_THROWS_AS(gauss_2f1(1, 1, -2, 0.5), DomainError);
}

TEST_CASE("reference quantiles") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0));
    CHECK(chi2_quantile(0.95, 1) == doctest::Approx(3.841459).epsilon(1e-6));
    CHECK(chi2_quantile(0.95, 190) == doctest::Approx(223.16).epsilon(1e-4));
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(f_quantile(1.0, 1, 2), DomainError);
}

TEST_CASE("F quantiles match bisection on an independently integrated cdf") {
    const double cases[][3] = {{0.95, 1, 16}, {0.998889, 1, 16}, {0.9975, 19, 84}, {0.5, 5, 10}};
    for (const auto& c : cases) {
        const double oracle = testsupport::bisect_quantile(
            [&](double x) { return testsupport::f_cdf_oracle(x, c[1], c[2]); }, c[0], 0.0, 200.0);
        CHECK(f_quantile(c[0], c[1], c[2]) == doctest::Approx(oracle).epsilon(1e-7));
    }
}

TEST_CASE("F cdf, sf and pdf are mutually consistent") {
    for (double x : {0.01, 0.5, 1.0, 3.0, 12.0}) {
        CHECK(f_cdf(x, 3, 17) + f_sf(x, 3, 17) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(f_cdf(x, 3, 17) == doctest::Approx(testsupport::f_cdf_oracle(x, 3, 17)).epsilon(1e-9));
        const double h = 1e-5 * std::max(1.0, x);
        const double slope = (f_cdf(x + h, 3, 17) - f_cdf(x - h, 3, 17)) / (2 * h);
        CHECK(f_pdf(x, 3, 17) == doctest::Approx(slope).epsilon(1e-6));
    }
    CHECK(f_pdf(0.0, 2, 10) == doctest::Approx(1.0));
    CHECK(f_pdf(0.0, 3, 10) == 0.0);
    CHECK(std::isinf(f_pdf(0.0, 1, 10)));
    CHECK(f_sf(0.0, 4, 9) == 1.0);
}

TEST_CASE("upper quantiles stay accurate deep in the tail") {
    const double level = 1.0 - 1e-9;
    const double x = f_quantile(level, 1, 400);
    CHECK(f_sf(x, 1, 400) == doctest::Approx(1e-9).epsilon(1e-6));
    CHECK(chi2_sf(chi2_quantile(level, 3), 3) == doctest::Approx(1e-9).epsilon(1e-6));
    CHECK(normal_sf(normal_quantile(level)) == doctest::Approx(1e-9).epsilon(1e-6));
}

namespace {

// Integral of density_Z over (0, inf) by Simpson after x = w^2, w = v/(1-v).
double integrate_density(const ZDensityParams& prm, double from = 0.0) {
    const double w0 = std::sqrt(from);
    const double v0 = w0 / (1.0 + w0);
    auto g = [&](double v) {
        if (v >= 1.0) {
            return 0.0;
        }
        // w * f(w^2) has a finite limit at w = 0 for q = 1
        const double w = std::max(v / (1.0 - v), 1e-12);
        return density_Z(w * w, prm) * 2.0 * w / ((1.0 - v) * (1.0 - v));
    };
    return testsupport::simpson(g, v0, 1.0, 200000);
}

}  // namespace

TEST_CASE("density_Z reduces to the F density at lambda = 0") {
    for (double x : {0.1, 1.0, 4.0}) {
        CHECK(density_Z(x, {4, 20, 0.0}) == doctest::Approx(f_pdf(x, 4, 20)).epsilon(1e-13));
    }
}

TEST_CASE("density_Z integrates to one") {
    for (int q : {1, 5, 19}) {
        for (int n : {10, 50}) {
            for (double lambda : {0.0, 1.0, 5.0}) {
                const ZDensityParams prm{q, n, lambda};
                CAPTURE(q);
                CAPTURE(n);
                CAPTURE(lambda);
                CHECK(integrate_density(prm) == doctest::Approx(1.0).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("marginal_power_Z") {
    SUBCASE("null case is the F tail") {
        CHECK(marginal_power_Z(2.5, {3, 30, 0.0}) == doctest::Approx(f_sf(2.5, 3, 30)).epsilon(1e-12));
    }
    SUBCASE("matches an independent tail integral") {
        for (const ZDensityParams prm : {ZDensityParams{1, 16, 0.8}, ZDensityParams{9, 16, 2.0},
                                         ZDensityParams{19, 50, 0.3}}) {
            const double crit = f_quantile(0.95, prm.q, prm.n);
            CHECK(marginal_power_Z(crit, prm) == doctest::Approx(integrate_density(prm, crit)).epsilon(1e-7));
        }
    }
    SUBCASE("monotone in lambda and bounded") {
        double prev = 0.0;
        for (double lambda : {0.0, 0.1, 0.5, 1.0, 3.0, 10.0}) {
            const double pw = marginal_power_Z(4.0, {2, 25, lambda});
            CHECK(pw >= prev);
            CHECK(pw <= 1.0);
            prev = pw;
        }
        CHECK(marginal_power_Z(0.0, {2, 25, 1.0}) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("integrate_gauss_kronrod") {
    CHECK(integrate_gauss_kronrod([](double x) { return x * x; }, 0, 1).value == doctest::Approx(1.0 / 3.0));
    CHECK(integrate_gauss_kronrod([](double x) { return std::sin(x); }, 0, std::numbers::pi).value ==
          doctest::Approx(2.0).epsilon(1e-12));
    const auto r = integrate_gauss_kronrod([](double x) { return 1.0 / std::sqrt(x); }, 0, 1, 1e-8, 1e-8);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-7));
    CHECK_THROWS_AS(integrate_gauss_kronrod([](double x) { return std::sin(1.0 / (x + 1e-9)); }, 0, 1, 1e-14,
                                            1e-14, 3),
                    NoConvergence);
}
