#include "factorlens/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <ostream>

#include "factorlens/errors.hpp"
#include "factorlens/parallel.hpp"
#include "factorlens/randmat.hpp"
#include "factorlens/special.hpp"

namespace factorlens::report {

namespace {

using calibrate::Statistic;

constexpr Statistic kTested[] = {Statistic::T_el, Statistic::T_pr, Statistic::T_LR};
constexpr std::uint64_t kSubsetStreamOffset = std::uint64_t{1} << 63;

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

const calibrate::CriticalValueTable& find_table(std::span<const calibrate::CriticalValueTable> tables,
                                                Statistic s, const teststats::FactorModelSpec& spec) {
    for (const auto& t : tables) {
        if (t.statistic == s && t.p == spec.p && t.T == spec.T && t.K == spec.K && t.demeaned == spec.demeaned) {
            return t;
        }
    }
    throw MissingCalibration("no calibrated " + std::string(calibrate::to_string(s)) + " table for p=" +
                             std::to_string(spec.p) + " T=" + std::to_string(spec.T) + " K=" + std::to_string(spec.K) +
                             (spec.demeaned ? " (demeaned)" : ""));
}

TestOutcome decide(std::string test, Source source, double statistic, double compared, double critical,
                   double p_value) {
    TestOutcome o;
    o.test = std::move(test);
    o.source = source;
    o.statistic = statistic;
    o.compared_value = compared;
    o.critical_value = critical;
    o.p_value = std::clamp(p_value, 0.0, 1.0);
    o.reject = compared > critical;
    return o;
}

TestReport run_tests_with(const panel::ReturnsPanel& panel, const TestOptions& options, SourceChoice choice,
                          std::span<const calibrate::CriticalValueTable> tables) {
    TestReport rep;
    rep.spec = {panel.p(), panel.K(), panel.T(), panel.demeaned};
    rep.spec.validate();
    rep.alpha = options.alpha;
    rep.lr_scale = options.lr_scale;
    for (int c : panel.asset_columns) {
        rep.labels.push_back(panel.labels[static_cast<std::size_t>(c)]);
    }
    const PrecisionStats ps = teststats::precision_stats_from_data(panel.assets(), panel.factors(), panel.demeaned);
    rep.statistics = teststats::compute_statistics(ps);
    const int p = rep.spec.p;
    const int K = rep.spec.K;
    const int t_eff = rep.spec.effective_T();
    const int n = rep.spec.dof_n();
    rep.regime = options.regime_override.value_or(asymptotics::select_regime(p, t_eff, K));
    rep.t_lr_standardized = asymptotics::tlr_standardize(rep.statistics.ln_t_lr_star, p, t_eff, K, options.lr_scale);
    const auto& st = rep.statistics;
    const double alpha = options.alpha;

    switch (choice) {
    case SourceChoice::calibrated: {
        for (Statistic s : kTested) {
            const auto& table = find_table(tables, s, rep.spec);
            const double value = calibrate::evaluate(s, st, ps, options.lr_scale);
            rep.outcomes.push_back(decide(std::string(calibrate::to_string(s)), Source::calibrated, value, value,
                                          table.critical_value(alpha), calibrate::empirical_pvalue(value, table)));
            rep.calibration_seed = table.master_seed;
            rep.calibration_reps = table.reps;
        }
        break;
    }
    case SourceChoice::finite_sample: {
        const double pairs = p * (p - 1.0) / 2.0;
        rep.outcomes.push_back(decide("T_el", Source::bonferroni, st.t_el, st.t_el,
                                      calibrate::bonferroni_critical_el(alpha, p, rep.spec.T, K, rep.spec.demeaned),
                                      pairs * special::f_sf(st.t_el, 1.0, n)));
        rep.outcomes.push_back(decide("T_pr", Source::bonferroni, st.t_pr, st.t_pr,
                                      calibrate::bonferroni_critical_pr(alpha, p, rep.spec.T, K, rep.spec.demeaned),
                                      p * special::f_sf(st.t_pr, p - 1.0, n)));
        rep.outcomes.push_back(decide("T_LR", Source::chi2_asymptotic, st.t_lr, st.t_lr,
                                      calibrate::lr_chi2_critical(alpha, p), special::chi2_sf(st.t_lr, pairs)));
        break;
    }
    case SourceChoice::highdim_asymptotic: {
        const double pairs = p * (p - 1.0) / 2.0;
        const auto& regime = rep.regime;
        rep.outcomes.push_back(decide("T_el", Source::highdim_asymptotic, st.t_el, st.t_el,
                                      asymptotics::tij_null_critical(1.0 - alpha / pairs, regime),
                                      pairs * asymptotics::tij_null_pvalue(st.t_el, regime)));
        if (regime.kind() == asymptotics::Regime::Kind::concentration) {
            const auto mode = t_eff - K - p > 3 ? asymptotics::TjMode::finite_sample_adjusted : asymptotics::TjMode::limit;
            const double z = asymptotics::tj_standardize(st.t_pr, p, t_eff, K, mode);
            rep.outcomes.push_back(decide("T_pr", Source::highdim_asymptotic, st.t_pr, z,
                                          special::normal_quantile(1.0 - alpha / p), p * special::normal_sf(z)));
        } else {
            const double d = regime.d();
            const double crit = (d + 1.0) / special::chi2_quantile(alpha / p, d + 1.0);
            const double pv = st.t_pr > 0.0 ? p * asymptotics::tj_boundary_pvalue(st.t_pr, d) : 1.0;
            rep.outcomes.push_back(decide("T_pr", Source::highdim_asymptotic, st.t_pr, st.t_pr, crit, pv));
        }
        if (t_eff - K - p < 4) {
            rep.warnings.push_back("T_eff - K - p < 4: the log-determinant normal approximation may be unreliable");
        }
        rep.outcomes.push_back(decide("T_LR", Source::highdim_asymptotic, st.t_lr, rep.t_lr_standardized,
                                      special::normal_quantile(1.0 - alpha), special::normal_sf(rep.t_lr_standardized)));
        break;
    }
    case SourceChoice::automatic:
        throw DomainError("run_tests: source must be resolved before use");
    }
    return rep;
}

}  // namespace

std::string_view to_string(Source s) {
    switch (s) {
    case Source::calibrated:
        return "calibrated";
    case Source::bonferroni:
        return "bonferroni";
    case Source::chi2_asymptotic:
        return "chi2_asymptotic";
    case Source::highdim_asymptotic:
        return "highdim_asymptotic";
    }
    return "unknown";
}

SourceChoice source_choice_from_string(std::string_view name) {
    if (name == "auto") {
        return SourceChoice::automatic;
    }
    if (name == "calibrated") {
        return SourceChoice::calibrated;
    }
    if (name == "bonferroni" || name == "finite_sample") {
        return SourceChoice::finite_sample;
    }
    if (name == "highdim" || name == "highdim_asymptotic") {
        return SourceChoice::highdim_asymptotic;
    }
    throw ParseError("unknown critical source '" + std::string(name) + "'");
}

SourceChoice resolve_source(SourceChoice choice, const teststats::FactorModelSpec& spec,
                            std::vector<std::string>& warnings) {
    if (choice != SourceChoice::automatic) {
        return choice;
    }
    if (spec.effective_T() <= kCalibrationRatio * (spec.p + spec.K)) {
        return SourceChoice::calibrated;
    }
    warnings.push_back("T_eff exceeds 200 (p + K): using high-dimensional asymptotic critical values instead of "
                       "calibration");
    return SourceChoice::highdim_asymptotic;
}

std::vector<calibrate::CriticalValueTable> calibration_for(const teststats::FactorModelSpec& spec,
                                                           const TestOptions& options) {
    calibrate::CalibrationOptions co;
    co.retain_null_sample = true;
    co.workers = options.workers;
    co.lr_scale = options.lr_scale;
    const double alphas[] = {options.alpha};
    return calibrate::calibrate_many(kTested, spec.p, spec.T, spec.K, spec.demeaned, alphas, options.calibration_reps,
                                     options.seed, co);
}

TestReport run_tests(const panel::ReturnsPanel& panel, const TestOptions& options) {
    const teststats::FactorModelSpec spec{panel.p(), panel.K(), panel.T(), panel.demeaned};
    spec.validate();
    std::vector<std::string> warnings;
    const SourceChoice choice = resolve_source(options.source, spec, warnings);
    std::vector<calibrate::CriticalValueTable> computed;
    std::span<const calibrate::CriticalValueTable> tables = options.tables;
    if (choice == SourceChoice::calibrated && options.tables.empty()) {
        computed = calibration_for(spec, options);
        tables = computed;
    }
    TestReport rep = run_tests_with(panel, options, choice, tables);
    rep.warnings.insert(rep.warnings.begin(), warnings.begin(), warnings.end());
    return rep;
}

nlohmann::json to_json(const TestReport& report) {
    using nlohmann::json;
    const auto& st = report.statistics;
    const auto label = [&](int i) {
        return i >= 0 && static_cast<std::size_t>(i) < report.labels.size() ? report.labels[static_cast<std::size_t>(i)]
                                                                              : std::to_string(i + 1);
    };
    json doc;
    doc["schema"] = "factorlens/1";
    doc["kind"] = "test_report";
    doc["spec"] = {{"p", report.spec.p},
                   {"K", report.spec.K},
                   {"T", report.spec.T},
                   {"demeaned", report.spec.demeaned},
                   {"T_eff", report.spec.effective_T()},
                   {"dof_n", report.spec.dof_n()}};
    doc["alpha"] = report.alpha;
    doc["statistics"] = {
        {"T_el", st.t_el},
        {"T_el_argmax",
         {{"index", {st.t_el_argmax.i + 1, st.t_el_argmax.j + 1}},
          {"labels", {label(st.t_el_argmax.i), label(st.t_el_argmax.j)}}}},
        {"T_pr", st.t_pr},
        {"T_pr_argmax", {{"index", st.t_pr_argmax + 1}, {"label", label(st.t_pr_argmax)}}},
        {"ln_T_LR_star", st.ln_t_lr_star},
        {"T_LR", st.t_lr},
        {"T_LR_standardized", report.t_lr_standardized},
    };
    json tests = json::array();
    for (const auto& o : report.outcomes) {
        tests.push_back({{"test", o.test},
                         {"source", to_string(o.source)},
                         {"statistic", o.statistic},
                         {"compared_value", o.compared_value},
                         {"critical_value", o.critical_value},
                         {"p_value", o.p_value},
                         {"reject", o.reject}});
    }
    doc["tests"] = tests;
    if (report.calibration_seed) {
        doc["calibration"] = {{"seed", *report.calibration_seed},
                              {"reps", *report.calibration_reps},
                              {"null_convention", calibrate::kNullConvention}};
    } else {
        doc["calibration"] = nullptr;
    }
    if (report.regime.kind() == asymptotics::Regime::Kind::concentration) {
        doc["regime"] = {{"kind", "concentration"}, {"c", report.regime.c()}};
    } else {
        doc["regime"] = {{"kind", "boundary"}, {"d", report.regime.d()}};
    }
    doc["lr_scale"] = report.lr_scale == asymptotics::LrScale::std_dev ? "std_dev" : "variance";
    doc["warnings"] = report.warnings;
    return doc;
}

BatchSummary batch_subset_test(const panel::ReturnsPanel& panel, int subset_size, int num_subsets,
                               const TestOptions& options) {
    if (subset_size < 2 || subset_size > panel.p()) {
        throw BadDimension("batch_subset_test: subset size " + std::to_string(subset_size) + " must lie in [2, " +
                           std::to_string(panel.p()) + "]");
    }
    if (num_subsets < 1) {
        throw BadDimension("batch_subset_test: need at least one subset");
    }
    BatchSummary summary;
    summary.subset_size = subset_size;
    summary.num_subsets = num_subsets;
    const teststats::FactorModelSpec spec{subset_size, panel.K(), panel.T(), panel.demeaned};
    spec.validate();
    const SourceChoice choice = resolve_source(options.source, spec, summary.warnings);
    std::vector<calibrate::CriticalValueTable> computed;
    std::span<const calibrate::CriticalValueTable> tables = options.tables;
    if (choice == SourceChoice::calibrated && options.tables.empty()) {
        computed = calibration_for(spec, options);
        tables = computed;
    }

    const auto count = static_cast<std::size_t>(num_subsets);
    std::vector<std::array<double, 3>> p_values(count);
    std::vector<std::vector<std::string>> subset_warnings(count);
    parallel_for(count, options.workers, [&](std::size_t s) {
        randmat::Rng rng({options.seed, kSubsetStreamOffset + s});
        std::vector<int> positions(static_cast<std::size_t>(panel.p()));
        std::iota(positions.begin(), positions.end(), 0);
        for (std::size_t k = 0; k < static_cast<std::size_t>(subset_size); ++k) {
            const auto pick = k + rng.below(positions.size() - k);
            std::swap(positions[k], positions[pick]);
        }
        positions.resize(static_cast<std::size_t>(subset_size));
        std::sort(positions.begin(), positions.end());
        const TestReport rep = run_tests_with(panel.with_assets(positions), options, choice, tables);
        for (std::size_t t = 0; t < 3; ++t) {
            p_values[s][t] = rep.outcomes[t].p_value;
        }
        subset_warnings[s] = rep.warnings;
    });
    if (!subset_warnings.empty()) {
        summary.warnings.insert(summary.warnings.end(), subset_warnings[0].begin(), subset_warnings[0].end());
    }

    const char* names[] = {"T_el", "T_pr", "T_LR"};
    for (std::size_t t = 0; t < 3; ++t) {
        std::vector<double> v(count);
        for (std::size_t s = 0; s < count; ++s) {
            v[s] = p_values[s][t];
        }
        std::sort(v.begin(), v.end());
        summary.p_values.push_back({names[t], v.front(), calibrate::empirical_quantile(v, 0.25),
                                    calibrate::empirical_quantile(v, 0.5), calibrate::empirical_quantile(v, 0.75),
                                    v.back()});
    }
    return summary;
}

void write_csv(std::ostream& out, const BatchSummary& summary) {
    out << "test,min,q1,median,q3,max\n";
    for (const auto& q : summary.p_values) {
        out << q.test << ',' << shortest(q.min) << ',' << shortest(q.q1) << ',' << shortest(q.median) << ','
            << shortest(q.q3) << ',' << shortest(q.max) << '\n';
    }
}

}  // namespace factorlens::report
