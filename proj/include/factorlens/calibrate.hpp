#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factorlens/asymptotics.hpp"
#include "factorlens/teststats.hpp"

#include <json.hpp>

namespace factorlens::calibrate {

enum class Statistic { T_el, T_pr, T_LR, ln_T_LR_star, T_LR_standardized };

std::string_view to_string(Statistic s);
/// Inverse of to_string; throws ParseError for unknown names.
Statistic statistic_from_string(std::string_view name);

/// Value of one statistic; T_LR_standardized uses the given scale convention.
double evaluate(Statistic s, const teststats::TestStatistics& stats, const PrecisionStats& ps,
                asymptotics::LrScale lr_scale = asymptotics::LrScale::std_dev);

/// Monte-Carlo null quantiles of one statistic.
struct CriticalValueTable {
    Statistic statistic = Statistic::T_el;
    int p = 0;
    int T = 0;
    int K = 0;
    bool demeaned = false;
    int reps = 0;
    std::uint64_t master_seed = 0;
    std::vector<double> alphas;
    std::vector<double> critical_values;
    /// Sorted ascending when retained.
    std::optional<std::vector<double>> null_sample;
    /// Only meaningful for T_LR_standardized.
    asymptotics::LrScale lr_scale = asymptotics::LrScale::std_dev;

    /// Critical value for `alpha`: the stored entry when alpha was tabulated,
    /// otherwise recomputed from the null sample. Throws MissingCalibration
    /// when neither is available.
    double critical_value(double alpha) const;
};

/// Stored with every table: the null law that was sampled.
inline constexpr std::string_view kNullConvention = "V11^{-1} ~ W_p(T_eff - K, I)";

inline constexpr int kMinReps = 1000;
inline constexpr int kDefaultReps = 100000;

struct CalibrationOptions {
    bool retain_null_sample = false;
    /// 0 picks default_workers().
    unsigned workers = 0;
    asymptotics::LrScale lr_scale = asymptotics::LrScale::std_dev;
};

/// Draws `reps` null precision blocks (replicate r uses stream r of
/// master_seed) and tabulates the (1 - alpha)-quantiles of each requested
/// statistic. All statistics share the same draws. Output is independent of
/// the worker count.
std::vector<CriticalValueTable> calibrate_many(std::span<const Statistic> statistics, int p, int T, int K,
                                               bool demeaned, std::span<const double> alphas, int reps,
                                               std::uint64_t master_seed, const CalibrationOptions& options = {});

CriticalValueTable calibrate(Statistic statistic, int p, int T, int K, bool demeaned,
                             std::span<const double> alphas, int reps, std::uint64_t master_seed,
                             const CalibrationOptions& options = {});

/// Type-7 sample quantile (linear interpolation between order statistics)
/// of an ascending sample. prob in [0, 1].
double empirical_quantile(std::span<const double> sorted, double prob);

enum class PValueConvention {
    plain,    ///< #{null >= observed} / reps, may be exactly 0
    add_one,  ///< (1 + #{null >= observed}) / (1 + reps)
};

double empirical_pvalue(double observed, const CriticalValueTable& table,
                        PValueConvention convention = PValueConvention::plain);

/// F_{1,n} quantile at level 1 - 2 alpha / (p(p-1)), n = T_eff - K - p + 1.
double bonferroni_critical_el(double alpha, int p, int T, int K, bool demeaned);
/// F_{p-1,n} quantile at level 1 - alpha / p.
double bonferroni_critical_pr(double alpha, int p, int T, int K, bool demeaned);
/// chi2_{p(p-1)/2} quantile at level 1 - alpha.
double lr_chi2_critical(double alpha, int p);

/// Kolmogorov-Smirnov distance between the empirical cdf of an ascending
/// sample and `cdf`. Throws EmptySample.
double ks_statistic(std::span<const double> sorted, const std::function<double(double)>& cdf);

nlohmann::json to_json(const CriticalValueTable& table);
CriticalValueTable table_from_json(const nlohmann::json& doc);

/// Rows statistic,p,T,K,alpha,critical_value with a header line.
void write_csv(std::ostream& out, std::span<const CriticalValueTable> tables);

}  // namespace factorlens::calibrate
