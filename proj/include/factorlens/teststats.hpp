#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "factorlens/linalg.hpp"
#include "factorlens/precision_stats.hpp"

namespace factorlens::teststats {

/// Dimensions of a fitted factor model: p responses, K observable factors,
/// T observations. Requires p >= 2, K >= 0 and p + K < T_eff.
struct FactorModelSpec {
    int p = 0;
    int K = 0;
    int T = 0;
    bool demeaned = false;

    int effective_T() const noexcept { return demeaned ? T - 1 : T; }
    int dof_n() const noexcept { return effective_T() - K - p + 1; }
    /// Throws BadDimension when the invariants above do not hold.
    void validate() const;
};

/// Zero-based pair with j < i.
struct IndexPair {
    int i = 1;
    int j = 0;
    bool operator==(const IndexPair&) const = default;
};

struct TestStatistics {
    double t_el = 0.0;
    IndexPair t_el_argmax;
    double t_pr = 0.0;
    int t_pr_argmax = 0;
    double ln_t_lr_star = 0.0;
    double t_lr = 0.0;
    /// Packed strictly-lower triangle, row by row: (1,0), (2,0), (2,1), ...
    std::optional<std::vector<double>> all_t_ij;
    std::optional<std::vector<double>> all_t_j;
};

/// Position of pair (i, j), j < i, in TestStatistics::all_t_ij.
inline std::size_t packed_pair_index(int i, int j) {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(i - 1) / 2 + static_cast<std::size_t>(j);
}

/// Builds V11 from data. X is p x T (one row per response series), F is K x T.
/// The scatter of the stacked series Y = (X; F) is Y Y^T, or the centred
/// scatter Y (I - J/T) Y^T when demeaned; V = scatter^{-1} = (T_eff S)^{-1}.
PrecisionStats precision_stats_from_data(const linalg::Matrix& X, const linalg::Matrix& F, bool demeaned);

/// (T-K-p+1) g^2 / (1 - g^2) with g = v_ij / sqrt(v_ii v_jj). Zero-based, j < i.
double stat_t_ij(const PrecisionStats& ps, int i, int j);

struct MaxPair {
    double value = 0.0;
    IndexPair argmax;
};
MaxPair stat_t_el(const PrecisionStats& ps);

/// (T-K-p+1)/(p-1) * (v_jj v_jj^{(-)} - 1), where v_jj^{(-)} is the j-th
/// diagonal entry of V11^{-1}.
double stat_t_j(const PrecisionStats& ps, int j);

struct MaxIndex {
    double value = 0.0;
    int argmax = 0;
};
MaxIndex stat_t_pr(const PrecisionStats& ps);

/// ln T_LR* = -(T_eff/2) [ln det V11^{-1} - sum_i ln v_ii^{(-)}]. The
/// likelihood ratio itself overflows for realistic T and is never formed.
double stat_ln_t_lr_star(const PrecisionStats& ps);

/// Same quantity from the correlation matrix R of V11^{-1}: -(T_eff/2) ln det R.
double stat_ln_t_lr_star_via_correlation(const PrecisionStats& ps);

/// Bartlett factor rho = 1 - (2p + 5) / (6 (T_eff - K)). Throws
/// DegenerateCorrection when rho <= 0.
double lr_bartlett_factor(int p, int T_eff, int K);

/// 2 rho ((T_eff - K)/T_eff) ln T_LR*, asymptotically chi2 with p(p-1)/2 dof.
double stat_t_lr(const PrecisionStats& ps);

/// All statistics in one pass. `retain_all` keeps the per-pair and per-column values.
TestStatistics compute_statistics(const PrecisionStats& ps, bool retain_all = false);

}  // namespace factorlens::teststats
