#pragma once

#include <functional>

namespace factorlens::special {

/// ln Gamma(x) for x > 0.
double ln_gamma(double x);

enum class HypergeometricTransform {
    automatic,  ///< Euler transformation when z > 0.5
    none,
    euler,
};

/// Gauss hypergeometric function 2F1(a, b; c; z) on 0 <= z < 1, from the
/// standard series sum_i (a)_i (b)_i / (c)_i z^i / i!. Terms are accumulated
/// in log space so large parameters do not overflow the partial sums.
double gauss_2f1(double a, double b, double c, double z,
                 HypergeometricTransform transform = HypergeometricTransform::automatic);

/// ln 2F1(a, b; c; z). Requires the function value to be positive.
double ln_gauss_2f1(double a, double b, double c, double z,
                    HypergeometricTransform transform = HypergeometricTransform::automatic);

// Central distributions. *_sf is the upper tail 1 - cdf, evaluated without
// cancellation.
double f_pdf(double x, double d1, double d2);
double f_cdf(double x, double d1, double d2);
double f_sf(double x, double d1, double d2);
double f_quantile(double p, double d1, double d2);

double chi2_cdf(double x, double k);
double chi2_sf(double x, double k);
double chi2_quantile(double p, double k);

double normal_cdf(double x);
double normal_sf(double x);
double normal_quantile(double p);

/// Parameters of the noncentral law of the column/pair statistics:
/// q numerator degrees, n = T - K - p + 1 denominator degrees, lambda >= 0.
struct ZDensityParams {
    int q = 1;
    int n = 1;
    double lambda = 0.0;
};

/// Density F_{q,n}(x) (1+lambda)^{-(n+q)/2} 2F1((n+q)/2, (n+q)/2; q/2; qx/(n+qx) * lambda/(1+lambda)).
/// At lambda = 0 this is the central F_{q,n} density.
double density_Z(double x, const ZDensityParams& params);

/// P[Z > crit] under density_Z, absolute error <= 1e-6.
double marginal_power_Z(double crit, const ZDensityParams& params);

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
};

/// Globally adaptive 15-point Gauss-Kronrod quadrature on a finite interval.
/// Throws NoConvergence when the error estimate stays above
/// max(abs_tol, rel_tol * |value|) after max_intervals subdivisions.
QuadratureResult integrate_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                         double abs_tol = 1e-10, double rel_tol = 1e-10,
                                         int max_intervals = 2000);

}  // namespace factorlens::special
