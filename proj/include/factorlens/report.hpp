#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factorlens/asymptotics.hpp"
#include "factorlens/calibrate.hpp"
#include "factorlens/panel.hpp"
#include "factorlens/teststats.hpp"

#include <json.hpp>

namespace factorlens::report {

/// Where a critical value came from.
enum class Source { calibrated, bonferroni, chi2_asymptotic, highdim_asymptotic };
std::string_view to_string(Source s);

/// What the caller asks for. `finite_sample` pairs Bonferroni criticals for
/// T_el and T_pr with the chi2 reference for T_LR.
enum class SourceChoice { automatic, calibrated, finite_sample, highdim_asymptotic };
SourceChoice source_choice_from_string(std::string_view name);

/// Heuristic feasibility bound for calibration: T_eff <= 200 (p + K).
inline constexpr int kCalibrationRatio = 200;

struct TestOptions {
    double alpha = 0.05;
    SourceChoice source = SourceChoice::automatic;
    int calibration_reps = calibrate::kDefaultReps;
    std::uint64_t seed = 20240601;
    /// Precomputed tables (must retain null samples for p-values). When
    /// empty and calibration is needed, tables are computed on the fly.
    std::vector<calibrate::CriticalValueTable> tables;
    std::optional<asymptotics::Regime> regime_override;
    asymptotics::LrScale lr_scale = asymptotics::LrScale::std_dev;
    unsigned workers = 0;
};

struct TestOutcome {
    std::string test;  ///< "T_el", "T_pr" or "T_LR"
    Source source = Source::calibrated;
    double statistic = 0.0;
    /// Value compared with the critical value: the statistic itself, or its
    /// standardized form for the high-dimensional sources.
    double compared_value = 0.0;
    double critical_value = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

struct TestReport {
    teststats::FactorModelSpec spec;
    teststats::TestStatistics statistics;
    double t_lr_standardized = 0.0;
    double alpha = 0.05;
    std::vector<TestOutcome> outcomes;
    std::optional<std::uint64_t> calibration_seed;
    std::optional<int> calibration_reps;
    asymptotics::Regime regime = asymptotics::Regime::concentration(0.5);
    asymptotics::LrScale lr_scale = asymptotics::LrScale::std_dev;
    std::vector<std::string> labels;  ///< asset labels, for argmax reporting
    std::vector<std::string> warnings;
};

/// Source actually used for `choice` on a panel of these dimensions, with a
/// warning appended when the automatic rule falls back to asymptotics.
SourceChoice resolve_source(SourceChoice choice, const teststats::FactorModelSpec& spec,
                            std::vector<std::string>& warnings);

/// Null tables for T_el, T_pr and T_LR, retaining null samples.
std::vector<calibrate::CriticalValueTable> calibration_for(const teststats::FactorModelSpec& spec,
                                                           const TestOptions& options);

TestReport run_tests(const panel::ReturnsPanel& panel, const TestOptions& options);

nlohmann::json to_json(const TestReport& report);

struct QuantileSummary {
    std::string test;
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
};

struct BatchSummary {
    int subset_size = 0;
    int num_subsets = 0;
    std::vector<QuantileSummary> p_values;
    std::vector<std::string> warnings;
};

/// Runs all tests on `num_subsets` uniformly random asset subsets of size
/// `subset_size` (drawn from options.seed) and summarizes each test's
/// p-values by type-7 quantiles. Calibration, when used, is done once.
BatchSummary batch_subset_test(const panel::ReturnsPanel& panel, int subset_size, int num_subsets,
                               const TestOptions& options);

/// Columns test,min,q1,median,q3,max.
void write_csv(std::ostream& out, const BatchSummary& summary);

}  // namespace factorlens::report
