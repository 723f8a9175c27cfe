#include <doctest.h>

#include <cmath>
#include <sstream>

#include "factorlens/calibrate.hpp"
#include "factorlens/errors.hpp"
#include "factorlens/powersim.hpp"

using namespace factorlens;
using namespace factorlens::powersim;

namespace {

ScenarioConfig base(Scenario s) {
    ScenarioConfig cfg;
    cfg.scenario = s;
    cfg.p = 10;
    cfg.T = 100;
    cfg.K = 5;
    cfg.reps = 1000;
    cfg.master_seed = 77;
    return cfg;
}

std::vector<calibrate::CriticalValueTable> tables_for(const ScenarioConfig& cfg) {
    const calibrate::Statistic stats[] = {calibrate::Statistic::T_el, calibrate::Statistic::T_pr,
                                          calibrate::Statistic::T_LR};
    const double alpha[] = {cfg.alpha};
    return calibrate::calibrate_many(stats, cfg.p, cfg.T, cfg.K, cfg.demeaned, alpha, 20000, 5);
}

}  // namespace

TEST_CASE("scenario correlation structures") {
    for (Scenario s : {Scenario::S1_single_corr, Scenario::S2_column, Scenario::S3_ar1}) {
        CHECK(build_sigma_u(s, 6, 0.0) == linalg::SymMatrix::identity(6));
    }
    const linalg::SymMatrix s1 = build_sigma_u(Scenario::S1_single_corr, 5, -0.4);
    CHECK(s1(0, 1) == -0.4);
    CHECK(s1(2, 3) == 0.0);

    const linalg::SymMatrix s3 = build_sigma_u(Scenario::S3_ar1, 5, 0.5);
    CHECK(s3(0, 2) == doctest::Approx(0.25));
    CHECK(s3(4, 0) == doctest::Approx(0.0625));

    const linalg::SymMatrix m = linalg::invert_spd(build_sigma_u(Scenario::S2_column, 10, 0.5));
    CHECK(m(0, 1) == doctest::Approx(0.239046).epsilon(1e-6));
    CHECK(m(0, 9) == doctest::Approx(0.239046).epsilon(1e-6));
    CHECK(m(0, 0) == doctest::Approx(1.0));
    CHECK(std::abs(m(2, 3)) < 1e-12);
    const linalg::SymMatrix mn = linalg::invert_spd(build_sigma_u(Scenario::S2_column, 10, -0.5));
    CHECK(mn(0, 1) == doctest::Approx(-0.239046).epsilon(1e-6));
    CHECK(mn(0, 2) == doctest::Approx(0.239046).epsilon(1e-6));
    CHECK(mn(0, 3) == doctest::Approx(-0.239046).epsilon(1e-6));

    CHECK_THROWS_AS(build_sigma_u(Scenario::S1_single_corr, 5, 0.6), DomainError);
    CHECK_THROWS_AS(build_sigma_u(Scenario::S1_single_corr, 1, 0.1), BadDimension);
}

TEST_CASE("scenario matrices are positive definite along the grid") {
    for (int p : {2, 10, 100}) {
        for (double rho = -0.5; rho <= 0.5001; rho += 0.05) {
            for (Scenario s : {Scenario::S1_single_corr, Scenario::S2_column, Scenario::S3_ar1}) {
                CHECK_NOTHROW(linalg::cholesky(build_sigma_u(s, p, rho)));
            }
            const double sum_sq = (p - 1) * rho * rho / (1.0 + 1.5 * (p - 1) * rho * rho);
            CHECK(sum_sq < 2.0 / 3.0);
        }
    }
}

TEST_CASE("datasets are reproducible and shaped") {
    const ScenarioConfig cfg = base(Scenario::S4_extra_factors);
    const Dataset a = generate_dataset(cfg, 3, 12);
    const Dataset b = generate_dataset(cfg, 3, 12);
    const Dataset c = generate_dataset(cfg, 3, 13);
    CHECK(a.X == b.X);
    CHECK(a.F == b.F);
    CHECK(a.X != c.X);
    CHECK(a.X.rows() == 10);
    CHECK(a.X.cols() == 100);
    CHECK(a.F.rows() == 5);
    CHECK_THROWS_AS(generate_dataset(cfg, 2.5, 0), DomainError);
    CHECK_THROWS_AS(generate_dataset(cfg, 11, 0), DomainError);
}

TEST_CASE("config validation") {
    ScenarioConfig cfg = base(Scenario::S1_single_corr);
    CHECK_NOTHROW(cfg.validate());
    cfg.rho = 0.7;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg = base(Scenario::S1_single_corr);
    cfg.T = 15;
    CHECK_THROWS_AS(cfg.validate(), BadDimension);
    cfg = base(Scenario::S4_extra_factors);
    cfg.k_tilde = 11;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    CHECK(scenario_from_string("s3") == Scenario::S3_ar1);
    CHECK_THROWS_AS(scenario_from_string("s5"), ParseError);
}

TEST_CASE("calibrated source needs tables") {
    const ScenarioConfig cfg = base(Scenario::S1_single_corr);
    const double grid[] = {0.0};
    CHECK_THROWS_AS(run_power_study(cfg, grid, CriticalSource::calibrated), MissingCalibration);
}

TEST_CASE("power study properties in scenario 1") {
    const ScenarioConfig cfg = base(Scenario::S1_single_corr);
    const auto tables = tables_for(cfg);
    const double grid[] = {-0.5, -0.3, -0.1, 0.0, 0.1, 0.3, 0.5};
    const CriticalSource sources[] = {CriticalSource::calibrated, CriticalSource::bonferroni_or_asymptotic};
    const auto curves = run_power_studies(cfg, grid, sources, tables);
    REQUIRE(curves.size() == 2);
    const PowerCurve& cal = curves[0];
    const PowerCurve& bon = curves[1];
    CHECK(bon.tests == std::vector<std::string>{"T_el-B", "T_pr-B", "T_LR-as"});
    const double size_band = 3.0 * std::sqrt(0.05 * 0.95 / cfg.reps);
    for (std::size_t t = 0; t < 3; ++t) {
        CHECK(std::abs(cal.rates[t][3] - 0.05) <= size_band);
        for (std::size_t g = 0; g < 7; ++g) {
            CHECK(cal.mc_se[t][g] == doctest::Approx(std::sqrt(cal.rates[t][g] * (1 - cal.rates[t][g]) / cfg.reps)));
        }
        // symmetry in rho
        for (std::size_t g = 0; g < 3; ++g) {
            const double a = cal.rates[t][g];
            const double b = cal.rates[t][6 - g];
            const double se = std::sqrt((a * (1 - a) + b * (1 - b)) / cfg.reps);
            CHECK(std::abs(a - b) <= 3.0 * se + 1e-12);
        }
        // nondecreasing in |rho|
        for (std::size_t g = 3; g < 6; ++g) {
            CHECK(cal.rates[t][g + 1] >= cal.rates[t][g] - 2.0 * (cal.mc_se[t][g] + cal.mc_se[t][g + 1]));
        }
    }
    // Bonferroni is conservative for the max tests
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t g = 0; g < 7; ++g) {
            CHECK(bon.rates[t][g] <= cal.rates[t][g] + 2.0 * cal.mc_se[t][g] + 1e-12);
        }
    }
    // the pair test wins when a single correlation moves
    CHECK(cal.rates_for("T_el")[6] > cal.rates_for("T_LR")[6]);
    CHECK_THROWS_AS(cal.rates_for("T_zz"), DomainError);
}

TEST_CASE("omitted factors make the likelihood ratio test reject") {
    const ScenarioConfig cfg = base(Scenario::S4_extra_factors);
    const auto tables = tables_for(cfg);
    const double grid[] = {0.0, 1.0};
    const PowerCurve c = run_power_study(cfg, grid, CriticalSource::calibrated, tables);
    CHECK(std::abs(c.rates_for("T_LR")[0] - 0.05) <= 3.0 * std::sqrt(0.05 * 0.95 / cfg.reps));
    CHECK(c.rates_for("T_LR")[1] > 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / cfg.reps));
}

TEST_CASE("power studies do not depend on the worker count") {
    ScenarioConfig cfg = base(Scenario::S3_ar1);
    cfg.reps = 200;
    const double grid[] = {0.0, 0.2};
    const PowerCurve a = run_power_study(cfg, grid, CriticalSource::bonferroni_or_asymptotic, {}, 1);
    const PowerCurve b = run_power_study(cfg, grid, CriticalSource::bonferroni_or_asymptotic, {}, 3);
    CHECK(a.rates == b.rates);
    cfg.lr_asymptotic = LrAsymptotic::clt;
    const PowerCurve c = run_power_study(cfg, grid, CriticalSource::bonferroni_or_asymptotic, {}, 1);
    CHECK(c.rates[0] == a.rates[0]);  // the max tests are unaffected
}

TEST_CASE("power CSV export") {
    ScenarioConfig cfg = base(Scenario::S2_column);
    cfg.reps = 50;
    const double grid[] = {0.1};
    const PowerCurve c = run_power_study(cfg, grid, CriticalSource::bonferroni_or_asymptotic);
    std::ostringstream out;
    const PowerCurve curves[] = {c};
    write_csv(out, curves);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "scenario,grid_value,test,critical_source,power,mc_se");
    std::getline(lines, line);
    CHECK(line.rfind("s2,0.1,T_el-B,bonferroni_or_asymptotic,", 0) == 0);
    int rows = 0;
    while (std::getline(lines, line)) {
        ++rows;
    }
    CHECK(rows == 2);
}
