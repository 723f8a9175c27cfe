#pragma once

namespace factorlens::asymptotics {

// Every function here takes T as the effective sample size (T - 1 for
// demeaned data).

/// High-dimensional limit regime: p/(T-K) -> c in (0,1), or T-K-p -> d > 0.
class Regime {
public:
    enum class Kind { concentration, boundary };

    static Regime concentration(double c);
    static Regime boundary(double d);

    Kind kind() const noexcept { return kind_; }
    /// Valid for Kind::concentration only; throws DomainError otherwise.
    double c() const;
    /// Valid for Kind::boundary only; throws DomainError otherwise.
    double d() const;

private:
    Regime(Kind kind, double value) : kind_(kind), value_(value) {}
    Kind kind_;
    double value_;
};

/// Below this many residual degrees of freedom T-K-p the boundary regime is used.
inline constexpr int kBoundaryThreshold = 30;

/// Boundary regime with d = T-K-p when T-K-p < 30, otherwise concentration
/// with c = p/(T-K).
Regime select_regime(int p, int T, int K);

/// Right-tail probability of T_ij under its limit law: chi2_1 (concentration)
/// or F_{1,d+1} (boundary).
double tij_null_pvalue(double t, const Regime& regime);

/// (1 - level)-quantile of the same limit law.
double tij_null_critical(double level, const Regime& regime);

enum class TjMode { limit, finite_sample_adjusted };

/// Mean and the (p-1)-scaled variance of F_{p-1, T-K-p+1}:
/// mu = n/(n-2), var = 2(T-K-2) n^2 / ((T-K-p-3)(T-K-p-1)^2) with n = T-K-p+1.
struct FMoments {
    double mu = 0.0;
    double var = 0.0;
};
FMoments f_moments(int p, int T, int K);

/// z-score of T_j. Limit mode: sqrt(p-1)(t_j - 1) sqrt((1-c)/2) with
/// c = p/(T-K). Adjusted mode: sqrt(p-1)(t_j - mu) / sqrt(var).
double tj_standardize(double t_j, int p, int T, int K, TjMode mode);

/// P[(d+1)/chi2_{d+1} > t_j].
double tj_boundary_pvalue(double t_j, double d);

/// Location and scale constants of the log-determinant CLT for the
/// correlation matrix of V11^{-1}. `sigma` is the value of
/// -2 (p/(T-K) + ln(1 - p/(T-K))); it is the variance of the limit.
struct LrMoments {
    double mu = 0.0;
    double sigma = 0.0;
};
LrMoments lr_moments(int p, int T, int K);

/// How the centred log-determinant is scaled. `std_dev` divides by
/// sqrt(sigma) and matches N(0,1) under the null in simulation; `variance`
/// divides by sigma itself.
enum class LrScale { std_dev, variance };

/// ((2/T) ln T_LR* + mu) / scale.
double tlr_standardize(double ln_t_lr_star, int p, int T, int K, LrScale scale = LrScale::std_dev);

/// P[T_ij > crit] from (sqrt(T_ij) - sqrt(T-K-p+2) sqrt(lambda))^2 ~ chi2_1.
double tij_noncentral_approx_power(double crit, double lambda_ij, int p, int T, int K);

/// P[T_j > crit] under the noncentral limit: normal with mean 1 + lambda/c
/// and variance (2/(1-c) + 4 lambda/c)/(p-1) (concentration), or
/// (1 + lambda/c)(d+1)/chi2_{d+1} (boundary). c is p/(T-K) in the boundary case.
double tj_noncentral_approx_power(double crit, double lambda_j, const Regime& regime, int p, int T, int K);

}  // namespace factorlens::asymptotics
