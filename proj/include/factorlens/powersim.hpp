#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "factorlens/calibrate.hpp"
#include "factorlens/linalg.hpp"

namespace factorlens::powersim {

enum class Scenario {
    S1_single_corr,    ///< Delta_12 = rho
    S2_column,         ///< one column of Delta^{-1} changed
    S3_ar1,            ///< Delta_ij = rho^|i-j|
    S4_extra_factors,  ///< k_tilde factors generated but not fitted
};

/// "s1".."s4".
std::string_view to_string(Scenario s);
Scenario scenario_from_string(std::string_view name);

/// Asymptotic reference used for the likelihood-ratio line of the
/// non-calibrated comparison: chi2 with p(p-1)/2 dof, or the standardized
/// log-determinant against N(0,1).
enum class LrAsymptotic { chi2, clt };

struct ScenarioConfig {
    Scenario scenario = Scenario::S1_single_corr;
    int p = 10;
    int K = 5;
    int T = 100;
    double rho = 0.0;
    int k_tilde = 0;
    int reps = 1000;
    std::uint64_t master_seed = 0;
    double alpha = 0.05;
    bool demeaned = false;
    LrAsymptotic lr_asymptotic = LrAsymptotic::chi2;

    /// Throws BadDimension / DomainError.
    void validate() const;
};

inline constexpr double kMaxAbsRho = 0.5;
inline constexpr int kMaxKTilde = 10;

/// Correlation-structure factor Delta of Sigma_u for scenarios S1-S3 (S4 uses
/// the identity). Scaling by diag(eta) happens per replicate.
linalg::SymMatrix build_sigma_u(Scenario scenario, int p, double rho);

struct Dataset {
    linalg::Matrix X;  ///< p x T responses
    linalg::Matrix F;  ///< K x T fitted factors
};

/// One replicate. `grid_value` is rho for S1-S3 and k_tilde for S4. The
/// random stream depends only on (master_seed, rep_index), so replicates
/// with equal index share their draws across grid values.
Dataset generate_dataset(const ScenarioConfig& cfg, double grid_value, std::uint64_t rep_index);

enum class CriticalSource { calibrated, bonferroni_or_asymptotic };
std::string_view to_string(CriticalSource s);

struct PowerCurve {
    ScenarioConfig config;
    CriticalSource source = CriticalSource::calibrated;
    std::vector<double> grid;
    /// e.g. {"T_el", "T_pr", "T_LR"} or {"T_el-B", "T_pr-B", "T_LR-as"}.
    std::vector<std::string> tests;
    /// rates[t][g]: rejection frequency of tests[t] at grid[g].
    std::vector<std::vector<double>> rates;
    std::vector<std::vector<double>> mc_se;

    /// Throws DomainError for an unknown test name.
    const std::vector<double>& rates_for(std::string_view test) const;
};

/// Null critical values of the three tests at cfg.alpha from calibrated
/// tables for (p, T, K, demeaned) of the scenario. Throws MissingCalibration
/// when a statistic or alpha is missing or the dimensions do not match.
struct CalibratedCriticals {
    double t_el = 0.0;
    double t_pr = 0.0;
    double t_lr = 0.0;
};
CalibratedCriticals criticals_from_tables(const ScenarioConfig& cfg, std::span<const calibrate::CriticalValueTable> tables);

/// Rejection frequencies over cfg.reps replicates per grid point, one curve
/// per requested source, all evaluated on the same datasets. Calibrated
/// sources need `tables`.
std::vector<PowerCurve> run_power_studies(const ScenarioConfig& cfg, std::span<const double> grid,
                                          std::span<const CriticalSource> sources,
                                          std::span<const calibrate::CriticalValueTable> tables = {},
                                          unsigned workers = 0);

PowerCurve run_power_study(const ScenarioConfig& cfg, std::span<const double> grid, CriticalSource source,
                           std::span<const calibrate::CriticalValueTable> tables = {}, unsigned workers = 0);

/// Columns scenario,grid_value,test,critical_source,power,mc_se.
void write_csv(std::ostream& out, std::span<const PowerCurve> curves);

}  // namespace factorlens::powersim
