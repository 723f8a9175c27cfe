#include "factorlens/asymptotics.hpp"

#include <cmath>
#include <string>

#include "factorlens/errors.hpp"
#include "factorlens/special.hpp"

namespace factorlens::asymptotics {

namespace {

void require_dims(int p, int T, int K, const char* who) {
    if (p < 2 || K < 0 || p >= T - K) {
        throw DomainError(std::string(who) + ": need p >= 2 and p < T - K, got p=" + std::to_string(p) +
                          " T=" + std::to_string(T) + " K=" + std::to_string(K));
    }
}

void require_nonnegative(double v, const char* who, const char* what) {
    if (!(v >= 0.0)) {
        throw DomainError(std::string(who) + ": " + what + " must be nonnegative");
    }
}

}  // namespace

Regime Regime::concentration(double c) {
    if (!(c > 0.0 && c < 1.0)) {
        throw DomainError("Regime: concentration c must lie in (0,1), got " + std::to_string(c));
    }
    return {Kind::concentration, c};
}

Regime Regime::boundary(double d) {
    if (!(d > 0.0) || !std::isfinite(d)) {
        throw DomainError("Regime: boundary d must be positive, got " + std::to_string(d));
    }
    return {Kind::boundary, d};
}

double Regime::c() const {
    if (kind_ != Kind::concentration) {
        throw DomainError("Regime: c requested from a boundary regime");
    }
    return value_;
}

double Regime::d() const {
    if (kind_ != Kind::boundary) {
        throw DomainError("Regime: d requested from a concentration regime");
    }
    return value_;
}

Regime select_regime(int p, int T, int K) {
    require_dims(p, T, K, "select_regime");
    const int d = T - K - p;
    if (d < kBoundaryThreshold) {
        return Regime::boundary(d);
    }
    return Regime::concentration(static_cast<double>(p) / (T - K));
}

double tij_null_pvalue(double t, const Regime& regime) {
    require_nonnegative(t, "tij_null_pvalue", "t");
    if (regime.kind() == Regime::Kind::concentration) {
        return special::chi2_sf(t, 1.0);
    }
    return special::f_sf(t, 1.0, regime.d() + 1.0);
}

double tij_null_critical(double level, const Regime& regime) {
    if (regime.kind() == Regime::Kind::concentration) {
        return special::chi2_quantile(level, 1.0);
    }
    return special::f_quantile(level, 1.0, regime.d() + 1.0);
}

FMoments f_moments(int p, int T, int K) {
    require_dims(p, T, K, "f_moments");
    const double m = T - K;
    if (m - p <= 3) {
        throw DegenerateDof("f_moments: need T - K - p > 3, got " + std::to_string(T - K - p));
    }
    const double n = m - p + 1.0;
    FMoments out;
    out.mu = n / (m - p - 1.0);
    out.var = 2.0 * (m - 2.0) * n * n / ((m - p - 3.0) * (m - p - 1.0) * (m - p - 1.0));
    return out;
}

double tj_standardize(double t_j, int p, int T, int K, TjMode mode) {
    require_dims(p, T, K, "tj_standardize");
    const double root = std::sqrt(static_cast<double>(p - 1));
    if (mode == TjMode::limit) {
        const double c = static_cast<double>(p) / (T - K);
        return root * (t_j - 1.0) * std::sqrt((1.0 - c) / 2.0);
    }
    const FMoments f = f_moments(p, T, K);
    return root * (t_j - f.mu) / std::sqrt(f.var);
}

double tj_boundary_pvalue(double t_j, double d) {
    if (!(t_j > 0.0)) {
        throw DomainError("tj_boundary_pvalue: t_j must be positive");
    }
    if (!(d > 0.0)) {
        throw DomainError("tj_boundary_pvalue: d must be positive");
    }
    if (std::isinf(t_j)) {
        return 0.0;
    }
    return special::chi2_cdf((d + 1.0) / t_j, d + 1.0);
}

LrMoments lr_moments(int p, int T, int K) {
    require_dims(p, T, K, "lr_moments");
    const double m = T - K;
    const double ratio = p / m;
    const double log_gap = std::log1p(-ratio);
    LrMoments out;
    out.mu = (p - 1.0 - m + 1.5) * log_gap - (m - 1.0) / m * p;
    out.sigma = -2.0 * (ratio + log_gap);
    return out;
}

double tlr_standardize(double ln_t_lr_star, int p, int T, int K, LrScale scale) {
    const LrMoments m = lr_moments(p, T, K);
    const double divisor = scale == LrScale::std_dev ? std::sqrt(m.sigma) : m.sigma;
    return (2.0 / T * ln_t_lr_star + m.mu) / divisor;
}

double tij_noncentral_approx_power(double crit, double lambda_ij, int p, int T, int K) {
    require_nonnegative(crit, "tij_noncentral_approx_power", "crit");
    require_nonnegative(lambda_ij, "tij_noncentral_approx_power", "lambda");
    require_dims(p, T, K, "tij_noncentral_approx_power");
    if (std::isinf(lambda_ij)) {
        return 1.0;
    }
    const double shift = std::sqrt(static_cast<double>(T - K - p + 2)) * std::sqrt(lambda_ij);
    const double root = std::sqrt(crit);
    // P[|Z + shift| > root]
    return special::normal_sf(root - shift) + special::normal_cdf(-root - shift);
}

double tj_noncentral_approx_power(double crit, double lambda_j, const Regime& regime, int p, int T, int K) {
    require_nonnegative(crit, "tj_noncentral_approx_power", "crit");
    require_nonnegative(lambda_j, "tj_noncentral_approx_power", "lambda");
    require_dims(p, T, K, "tj_noncentral_approx_power");
    if (regime.kind() == Regime::Kind::concentration) {
        const double c = regime.c();
        const double mean = 1.0 + lambda_j / c;
        const double sd = std::sqrt((2.0 / (1.0 - c) + 4.0 * lambda_j / c) / (p - 1));
        return special::normal_sf((crit - mean) / sd);
    }
    if (crit == 0.0) {
        return 1.0;
    }
    const double c = static_cast<double>(p) / (T - K);
    const double d = regime.d();
    return special::chi2_cdf((1.0 + lambda_j / c) * (d + 1.0) / crit, d + 1.0);
}

}  // namespace factorlens::asymptotics
