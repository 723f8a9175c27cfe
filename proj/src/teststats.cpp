#include "factorlens/teststats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "factorlens/errors.hpp"

namespace factorlens::teststats {

namespace {

void require_p_at_least_2(const PrecisionStats& ps, const char* who) {
    if (ps.p < 2) {
        throw BadDimension(std::string(who) + ": need p >= 2");
    }
}

double pair_statistic(const PrecisionStats& ps, std::size_t i, std::size_t j) {
    const double vij = ps.V11(i, j);
    const double num = vij * vij;
    const double den = ps.diag_V11[i] * ps.diag_V11[j] - num;
    return static_cast<double>(ps.dof_n) * num / den;
}

double column_statistic(const PrecisionStats& ps, std::size_t j) {
    const double excess = ps.diag_V11[j] * ps.diag_V11_inv[j] - 1.0;
    return std::max(0.0, static_cast<double>(ps.dof_n) / (ps.p - 1) * excess);
}

}  // namespace

void FactorModelSpec::validate() const {
    if (p < 2) {
        throw BadDimension("FactorModelSpec: need p >= 2, got " + std::to_string(p));
    }
    if (K < 0) {
        throw BadDimension("FactorModelSpec: K must be nonnegative");
    }
    if (p + K >= effective_T()) {
        throw BadDimension("FactorModelSpec: need p + K < T_eff, got p=" + std::to_string(p) +
                           " K=" + std::to_string(K) + " T_eff=" + std::to_string(effective_T()));
    }
}

PrecisionStats precision_stats_from_data(const linalg::Matrix& X, const linalg::Matrix& F, bool demeaned) {
    const std::size_t p = X.rows();
    const std::size_t k = F.rows();
    const std::size_t t = X.cols();
    if (k > 0 && F.cols() != t) {
        throw BadDimension("precision_stats_from_data: X has " + std::to_string(t) +
                           " observations but F has " + std::to_string(F.cols()));
    }
    const std::size_t t_eff = demeaned ? t - 1 : t;
    if (p < 1 || t == 0 || p + k >= t_eff) {
        throw BadDimension("precision_stats_from_data: need p + K < T_eff, got p=" + std::to_string(p) +
                           " K=" + std::to_string(k) + " T=" + std::to_string(t));
    }
    const std::size_t m = p + k;
    auto series = [&](std::size_t r) { return r < p ? X.row(r) : F.row(r - p); };

    std::vector<double> means(m, 0.0);
    if (demeaned) {
        for (std::size_t r = 0; r < m; ++r) {
            double s = 0.0;
            for (double v : series(r)) {
                s += v;
            }
            means[r] = s / static_cast<double>(t);
        }
    }
    linalg::SymMatrix scatter(m);
    for (std::size_t a = 0; a < m; ++a) {
        const auto ya = series(a);
        for (std::size_t b = a; b < m; ++b) {
            const auto yb = series(b);
            double s = 0.0;
            for (std::size_t c = 0; c < t; ++c) {
                s += (ya[c] - means[a]) * (yb[c] - means[b]);
            }
            scatter.set(a, b, s);
        }
    }
    linalg::SymMatrix v;
    try {
        v = linalg::invert_spd(scatter);
    } catch (const NotPositiveDefinite& e) {
        throw Singular(std::string("precision_stats_from_data: sample covariance is singular (") + e.what() +
                       ")");
    }
    return make_precision_stats(linalg::top_left_block(v, p), static_cast<int>(t), static_cast<int>(k),
                                demeaned);
}

double stat_t_ij(const PrecisionStats& ps, int i, int j) {
    if (j < 0 || i <= j || i >= ps.p) {
        throw BadIndex("stat_t_ij: need 0 <= j < i < p, got i=" + std::to_string(i) + " j=" + std::to_string(j));
    }
    return pair_statistic(ps, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

MaxPair stat_t_el(const PrecisionStats& ps) {
    require_p_at_least_2(ps, "stat_t_el");
    MaxPair best{-1.0, {1, 0}};
    for (int i = 1; i < ps.p; ++i) {
        for (int j = 0; j < i; ++j) {
            const double v = pair_statistic(ps, static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            if (v > best.value) {
                best = {v, {i, j}};
            }
        }
    }
    return best;
}

double stat_t_j(const PrecisionStats& ps, int j) {
    require_p_at_least_2(ps, "stat_t_j");
    if (j < 0 || j >= ps.p) {
        throw BadIndex("stat_t_j: index " + std::to_string(j) + " outside [0, " + std::to_string(ps.p) + ")");
    }
    return column_statistic(ps, static_cast<std::size_t>(j));
}

MaxIndex stat_t_pr(const PrecisionStats& ps) {
    require_p_at_least_2(ps, "stat_t_pr");
    MaxIndex best{-1.0, 0};
    for (int j = 0; j < ps.p; ++j) {
        const double v = column_statistic(ps, static_cast<std::size_t>(j));
        if (v > best.value) {
            best = {v, j};
        }
    }
    return best;
}

double stat_ln_t_lr_star(const PrecisionStats& ps) {
    double sum_log_diag = 0.0;
    for (double d : ps.diag_V11_inv) {
        sum_log_diag += std::log(d);
    }
    const double log_det = linalg::log_det_spd(ps.V11_inv);
    return std::max(0.0, -0.5 * ps.effective_T() * (log_det - sum_log_diag));
}

double stat_ln_t_lr_star_via_correlation(const PrecisionStats& ps) {
    const double log_det_r = linalg::log_det_spd(linalg::correlation_from_spd(ps.V11_inv));
    return std::max(0.0, -0.5 * ps.effective_T() * log_det_r);
}

double lr_bartlett_factor(int p, int T_eff, int K) {
    const double rho = 1.0 - (2.0 * p + 5.0) / (6.0 * (T_eff - K));
    if (!(rho > 0.0) || T_eff - K <= 0) {
        throw DegenerateCorrection("lr_bartlett_factor: rho = " + std::to_string(rho) +
                                   " is not positive; use Monte-Carlo or high-dimensional calibration");
    }
    return rho;
}

namespace {

double lr_from_star(const PrecisionStats& ps, double ln_star) {
    const int t_eff = ps.effective_T();
    const double rho = lr_bartlett_factor(ps.p, t_eff, ps.K);
    return 2.0 * rho * (static_cast<double>(t_eff - ps.K) / t_eff) * ln_star;
}

}  // namespace

double stat_t_lr(const PrecisionStats& ps) { return lr_from_star(ps, stat_ln_t_lr_star(ps)); }

TestStatistics compute_statistics(const PrecisionStats& ps, bool retain_all) {
    require_p_at_least_2(ps, "compute_statistics");
    TestStatistics out;
    const auto p = static_cast<std::size_t>(ps.p);

    std::vector<double> pairs;
    if (retain_all) {
        pairs.reserve(p * (p - 1) / 2);
    }
    out.t_el = -1.0;
    for (std::size_t i = 1; i < p; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double v = pair_statistic(ps, i, j);
            if (v > out.t_el) {
                out.t_el = v;
                out.t_el_argmax = {static_cast<int>(i), static_cast<int>(j)};
            }
            if (retain_all) {
                pairs.push_back(v);
            }
        }
    }
    std::vector<double> columns;
    out.t_pr = -1.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double v = column_statistic(ps, j);
        if (v > out.t_pr) {
            out.t_pr = v;
            out.t_pr_argmax = static_cast<int>(j);
        }
        if (retain_all) {
            columns.push_back(v);
        }
    }
    out.ln_t_lr_star = stat_ln_t_lr_star(ps);
    out.t_lr = lr_from_star(ps, out.ln_t_lr_star);
    if (retain_all) {
        out.all_t_ij = std::move(pairs);
        out.all_t_j = std::move(columns);
    }
    return out;
}

}  // namespace factorlens::teststats
