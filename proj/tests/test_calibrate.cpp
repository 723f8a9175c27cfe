#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "factorlens/calibrate.hpp"
#include "factorlens/errors.hpp"
#include "factorlens/randmat.hpp"
#include "factorlens/special.hpp"

using namespace factorlens;
using namespace factorlens::calibrate;

namespace {
const double kAlphas[] = {0.1, 0.05, 0.01, 0.005};
}

TEST_CASE("type-7 quantiles") {
    const double s[] = {1, 2, 3, 4};
    CHECK(empirical_quantile(s, 0.0) == 1.0);
    CHECK(empirical_quantile(s, 1.0) == 4.0);
    CHECK(empirical_quantile(s, 0.5) == 2.5);
    CHECK(empirical_quantile(s, 0.25) == doctest::Approx(1.75));
    CHECK(empirical_quantile(s, 0.9) == doctest::Approx(3.7));
    CHECK_THROWS_AS(empirical_quantile(std::span<const double>(), 0.5), EmptySample);
}

TEST_CASE("calibrate preconditions") {
    CHECK_THROWS_AS(calibrate::calibrate(Statistic::T_el, 5, 30, 2, false, kAlphas, 999, 1), BadDimension);
    CHECK_THROWS_AS(calibrate::calibrate(Statistic::T_el, 5, 7, 2, false, kAlphas, 1000, 1), BadDimension);
    const double bad[] = {1.5};
    CHECK_THROWS_AS(calibrate::calibrate(Statistic::T_el, 5, 30, 2, false, bad, 1000, 1), DomainError);
}

TEST_CASE("tables are deterministic across worker counts") {
    CalibrationOptions one;
    one.workers = 1;
    one.retain_null_sample = true;
    CalibrationOptions four = one;
    four.workers = 4;
    const Statistic stats[] = {Statistic::T_el, Statistic::T_pr, Statistic::T_LR, Statistic::T_LR_standardized};
    const auto a = calibrate_many(stats, 6, 40, 3, false, kAlphas, 2000, 99, one);
    const auto b = calibrate_many(stats, 6, 40, 3, false, kAlphas, 2000, 99, four);
    REQUIRE(a.size() == 4);
    for (std::size_t s = 0; s < a.size(); ++s) {
        CHECK(a[s].critical_values == b[s].critical_values);
        CHECK(*a[s].null_sample == *b[s].null_sample);
    }
    const auto c = calibrate_many(stats, 6, 40, 3, false, kAlphas, 2000, 100, one);
    CHECK(a[0].critical_values != c[0].critical_values);
}

TEST_CASE("table invariants") {
    CalibrationOptions opt;
    opt.retain_null_sample = true;
    const CriticalValueTable t = calibrate::calibrate(Statistic::T_pr, 5, 30, 2, false, kAlphas, 3000, 5, opt);
    CHECK(t.reps == 3000);
    CHECK(t.null_sample->size() == 3000);
    CHECK(std::is_sorted(t.null_sample->begin(), t.null_sample->end()));
    for (std::size_t k = 0; k < t.alphas.size(); ++k) {
        CHECK(t.critical_values[k] == empirical_quantile(*t.null_sample, 1.0 - t.alphas[k]));
        if (k > 0) {
            CHECK(t.critical_values[k] >= t.critical_values[k - 1]);  // alphas decrease
        }
    }
    CHECK(t.critical_value(0.05) == t.critical_values[1]);
    CHECK(t.critical_value(0.2) == empirical_quantile(*t.null_sample, 0.8));

    CriticalValueTable bare = t;
    bare.null_sample.reset();
    CHECK_THROWS_AS(bare.critical_value(0.2), MissingCalibration);
}

TEST_CASE("empirical p-values") {
    CriticalValueTable t;
    t.null_sample = std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    t.reps = 10;
    CHECK(empirical_pvalue(0.5, t) == 1.0);
    CHECK(empirical_pvalue(11.0, t) == 0.0);
    CHECK(empirical_pvalue(5.5, t) == doctest::Approx(0.5).epsilon(0.1));
    CHECK(empirical_pvalue(8.0, t) == doctest::Approx(0.3));
    CHECK(empirical_pvalue(11.0, t, PValueConvention::add_one) == doctest::Approx(1.0 / 11.0));
    t.null_sample.reset();
    CHECK_THROWS_AS(empirical_pvalue(1.0, t), MissingNullSample);
}

TEST_CASE("Bonferroni critical values") {
    const double n = 16;  // p=10, T=30, K=5
    CHECK(bonferroni_critical_el(0.05, 10, 30, 5, false) ==
          doctest::Approx(special::f_quantile(1.0 - 0.1 / 90.0, 1, n)).epsilon(1e-12));
    CHECK(bonferroni_critical_el(0.05, 2, 30, 5, false) ==
          doctest::Approx(special::f_quantile(0.95, 1, 24)).epsilon(1e-12));
    CHECK(bonferroni_critical_pr(0.05, 20, 104, 1, false) ==
          doctest::Approx(special::f_quantile(0.9975, 19, 84)).epsilon(1e-12));
    CHECK(bonferroni_critical_pr(0.05, 2, 30, 5, false) ==
          doctest::Approx(special::f_quantile(0.975, 1, 24)).epsilon(1e-12));
    // demeaning removes one observation
    CHECK(bonferroni_critical_el(0.05, 10, 31, 5, true) == bonferroni_critical_el(0.05, 10, 30, 5, false));
    // larger p at fixed n gives a larger critical value
    double prev = 0.0;
    for (int p = 2; p <= 20; ++p) {
        const double c = bonferroni_critical_el(0.05, p, p + 5 + 15, 5, false);
        CHECK(c > prev);
        prev = c;
    }
    CHECK_THROWS_AS(bonferroni_critical_el(0.0, 10, 30, 5, false), DomainError);
    CHECK_THROWS_AS(bonferroni_critical_pr(0.05, 10, 15, 5, false), DomainError);
}

TEST_CASE("chi-square likelihood ratio critical value") {
    CHECK(lr_chi2_critical(0.05, 2) == doctest::Approx(special::chi2_quantile(0.95, 1)));
    CHECK(lr_chi2_critical(0.05, 20) == doctest::Approx(223.16).epsilon(1e-4));
    CHECK(lr_chi2_critical(0.01, 20) > lr_chi2_critical(0.05, 20));
    CHECK_THROWS_AS(lr_chi2_critical(0.05, 1), DomainError);
}

TEST_CASE("calibrated criticals are below Bonferroni") {
    const Statistic stats[] = {Statistic::T_el, Statistic::T_pr, Statistic::T_LR};
    const double alpha[] = {0.05};
    const auto tables = calibrate_many(stats, 20, 104, 1, false, alpha, 20000, 3);
    CHECK(tables[0].critical_values[0] <= bonferroni_critical_el(0.05, 20, 104, 1, false));
    CHECK(tables[1].critical_values[0] <= bonferroni_critical_pr(0.05, 20, 104, 1, false));
    // the chi-square reference nearly coincides at this size
    CHECK(std::abs(tables[2].critical_values[0] - lr_chi2_critical(0.05, 20)) < 3.0);
}

TEST_CASE("size control on a fresh null sample") {
    const double alpha[] = {0.05};
    const CriticalValueTable t = calibrate::calibrate(Statistic::T_LR, 5, 30, 2, false, alpha, 10000, 1);
    const CriticalValueTable fresh = calibrate::calibrate(Statistic::T_LR, 5, 30, 2, false, alpha, 10000, 2,
                                               {.retain_null_sample = true});
    const auto& s = *fresh.null_sample;
    const double rate =
        static_cast<double>(std::count_if(s.begin(), s.end(), [&](double v) { return v > t.critical_values[0]; })) /
        s.size();
    CHECK(std::abs(rate - 0.05) <= 3.0 * std::sqrt(0.05 * 0.95 / 1e4));
}

TEST_CASE("calibration does not depend on the diagonal of the precision block") {
    std::mt19937_64 gen(6);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    std::vector<double> d(5);
    for (auto& x : d) {
        x = u(gen);
    }
    std::vector<double> inv_d(5);
    std::transform(d.begin(), d.end(), inv_d.begin(), [](double x) { return 1.0 / x; });
    std::vector<double> plain, scaled;
    for (std::uint64_t r = 0; r < 1000; ++r) {
        const PrecisionStats ps = randmat::sample_V11_null(5, 30, 2, {17, r});
        // V11^{-1} ~ W(n, D^2) is D W D, so V11 becomes D^{-1} V11 D^{-1}
        const PrecisionStats pd = make_precision_stats(ps.V11.scaled(inv_d), ps.V11_inv.scaled(d), 30, 2, false);
        plain.push_back(teststats::compute_statistics(ps).t_el);
        scaled.push_back(teststats::compute_statistics(pd).t_el);
    }
    std::sort(plain.begin(), plain.end());
    std::sort(scaled.begin(), scaled.end());
    CHECK(empirical_quantile(plain, 0.95) == doctest::Approx(empirical_quantile(scaled, 0.95)).epsilon(1e-10));
}

TEST_CASE("Kolmogorov-Smirnov distance") {
    const auto normal = [](double x) { return special::normal_cdf(x); };
    const double single[] = {0.3};
    CHECK(ks_statistic(single, normal) == doctest::Approx(std::max(normal(0.3), 1.0 - normal(0.3))));
    const double constant[] = {0.3, 0.3, 0.3};
    CHECK(ks_statistic(constant, normal) == doctest::Approx(std::max(normal(0.3), 1.0 - normal(0.3))));
    const double two[] = {-1.0, 1.0};
    const auto own = [](double x) { return x < -1.0 ? 0.0 : (x < 1.0 ? 0.5 : 1.0); };
    CHECK(ks_statistic(two, own) == 0.0);
    CHECK_THROWS_AS(ks_statistic(std::span<const double>(), normal), EmptySample);

    randmat::Rng rng({12, 0});
    std::vector<double> draws(10000);
    for (auto& v : draws) {
        v = rng.normal();
    }
    std::sort(draws.begin(), draws.end());
    CHECK(ks_statistic(draws, normal) < 1.95 / 100.0);
}

TEST_CASE("JSON and CSV export") {
    const double alpha[] = {0.05, 0.01};
    CalibrationOptions opt;
    opt.retain_null_sample = true;
    const CriticalValueTable t = calibrate::calibrate(Statistic::T_LR_standardized, 4, 30, 1, true, alpha, 1000, 8, opt);
    const nlohmann::json doc = to_json(t);
    CHECK(doc["schema"] == "factorlens/1");
    CHECK(doc["master_seed"] == 8);
    CHECK(doc["lr_scale"] == "std_dev");
    const CriticalValueTable back = table_from_json(nlohmann::json::parse(doc.dump()));
    CHECK(back.statistic == t.statistic);
    CHECK(back.critical_values == t.critical_values);
    CHECK(*back.null_sample == *t.null_sample);
    CHECK(back.demeaned);

    nlohmann::json broken = doc;
    broken["schema"] = "other";
    CHECK_THROWS_AS(table_from_json(broken), ParseError);
    broken = doc;
    broken.erase("alphas");
    CHECK_THROWS_AS(table_from_json(broken), ParseError);

    std::ostringstream csv;
    const CriticalValueTable tabs[] = {t};
    write_csv(csv, tabs);
    std::istringstream lines(csv.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "statistic,p,T,K,alpha,critical_value");
    std::getline(lines, line);
    CHECK(line.rfind("T_LR_standardized,4,30,1,0.05,", 0) == 0);
}

TEST_CASE("statistic names round trip") {
    for (Statistic s : {Statistic::T_el, Statistic::T_pr, Statistic::T_LR, Statistic::ln_T_LR_star,
                        Statistic::T_LR_standardized}) {
        CHECK(statistic_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_AS(statistic_from_string("T_xx"), ParseError);
}
