#include "factorlens/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "factorlens/errors.hpp"

namespace factorlens::special {

namespace {

constexpr int kMaxSeriesTerms = 1'000'000;

void require_probability(double p, const char* who) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError(std::string(who) + ": probability must lie in (0,1), got " +
                          std::to_string(p));
    }
}

void require_positive(double v, const char* who, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(who) + ": " + what + " must be positive and finite");
    }
}

struct LogValue {
    double log_abs = 0.0;
    int sign = 1;
};

// Plain series for 2F1 with the running sum kept as S * exp(scale).
LogValue hypergeometric_series(double a, double b, double c, double z) {
    if (z == 0.0) {
        return {0.0, 1};
    }
    double log_term = 0.0;
    int term_sign = 1;
    double scale = 0.0;
    double sum = 1.0;
    for (int i = 0; i < kMaxSeriesTerms; ++i) {
        const double di = static_cast<double>(i);
        const double num = (a + di) * (b + di);
        if (num == 0.0) {
            // Terminating series: a or b is a nonpositive integer.
            return {sum == 0.0 ? -std::numeric_limits<double>::infinity()
                               : scale + std::log(std::abs(sum)),
                    sum >= 0.0 ? 1 : -1};
        }
        const double ratio = num / ((c + di) * (di + 1.0)) * z;
        log_term += std::log(std::abs(ratio));
        if (ratio < 0.0) {
            term_sign = -term_sign;
        }
        if (log_term > scale) {
            sum = sum * std::exp(scale - log_term) + term_sign;
            scale = log_term;
        } else {
            sum += term_sign * std::exp(log_term - scale);
        }
        // Tail bound: once ratios are below rho < 1 the remainder is at most
        // |term| * rho / (1 - rho).
        const double rho = std::max(std::abs(ratio), std::abs(z));
        if (rho < 1.0 && sum != 0.0) {
            const double rel_term = std::exp(log_term - scale) / std::abs(sum);
            if (rel_term * rho / (1.0 - rho) < 1e-16 || rel_term < 1e-300) {
                return {scale + std::log(std::abs(sum)), sum > 0.0 ? 1 : -1};
            }
        }
    }
    throw NoConvergence("gauss_2f1: series did not converge within " +
                        std::to_string(kMaxSeriesTerms) + " terms");
}

LogValue log_gauss_2f1(double a, double b, double c, double z, HypergeometricTransform transform) {
    if (!(z >= 0.0 && z < 1.0)) {
        throw DomainError("gauss_2f1: z must lie in [0,1), got " + std::to_string(z));
    }
    if (c <= 0.0 && c == std::floor(c)) {
        throw DomainError("gauss_2f1: c must not be a nonpositive integer");
    }
    const bool use_euler = transform == HypergeometricTransform::euler ||
                           (transform == HypergeometricTransform::automatic && z > 0.5);
    if (!use_euler) {
        return hypergeometric_series(a, b, c, z);
    }
    // 2F1(a,b;c;z) = (1-z)^{c-a-b} 2F1(c-a, c-b; c; z)
    LogValue v = hypergeometric_series(c - a, c - b, c, z);
    v.log_abs += (c - a - b) * std::log1p(-z);
    return v;
}

double log_f_pdf(double x, double d1, double d2) {
    const double log_beta = ln_gamma(d1 / 2.0) + ln_gamma(d2 / 2.0) - ln_gamma((d1 + d2) / 2.0);
    if (x == 0.0) {
        if (d1 < 2.0) {
            return std::numeric_limits<double>::infinity();
        }
        if (d1 == 2.0) {
            return -log_beta + std::log(d1 / d2) * (d1 / 2.0);
        }
        return -std::numeric_limits<double>::infinity();
    }
    return 0.5 * d1 * std::log(d1 / d2) + (0.5 * d1 - 1.0) * std::log(x) -
           0.5 * (d1 + d2) * std::log1p(d1 * x / d2) - log_beta;
}

void check_z_params(const ZDensityParams& params) {
    if (params.q < 1 || params.n < 1 || !(params.lambda >= 0.0) || !std::isfinite(params.lambda)) {
        throw DomainError("density_Z: require q >= 1, n >= 1, lambda >= 0");
    }
}

// Gauss-Kronrod 7/15 nodes on [-1, 1] (abscissae listed for the positive half).
constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& other) const { return error < other.error; }
};

Segment gauss_kronrod_15(const std::function<double(double)>& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrodWeights[7];
    double gauss = fc * kGaussWeights[3];
    for (int k = 0; k < 7; ++k) {
        const double dx = half * kKronrodNodes[k];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrodWeights[k] * pair;
        if (k % 2 == 1) {
            gauss += kGaussWeights[k / 2] * pair;
        }
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace

double ln_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("ln_gamma: argument must be positive, got " + std::to_string(x));
    }
    return boost::math::lgamma(x);
}

double gauss_2f1(double a, double b, double c, double z, HypergeometricTransform transform) {
    const LogValue v = log_gauss_2f1(a, b, c, z, transform);
    return v.sign * std::exp(v.log_abs);
}

double ln_gauss_2f1(double a, double b, double c, double z, HypergeometricTransform transform) {
    const LogValue v = log_gauss_2f1(a, b, c, z, transform);
    if (v.sign <= 0) {
        throw DomainError("ln_gauss_2f1: function value is not positive");
    }
    return v.log_abs;
}

double f_pdf(double x, double d1, double d2) {
    require_positive(d1, "f_pdf", "d1");
    require_positive(d2, "f_pdf", "d2");
    if (!(x >= 0.0)) {
        throw DomainError("f_pdf: x must be nonnegative");
    }
    return std::exp(log_f_pdf(x, d1, d2));
}

double f_cdf(double x, double d1, double d2) {
    require_positive(d1, "f_cdf", "d1");
    require_positive(d2, "f_cdf", "d2");
    if (!(x >= 0.0)) {
        throw DomainError("f_cdf: x must be nonnegative");
    }
    if (std::isinf(x)) {
        return 1.0;
    }
    return boost::math::cdf(boost::math::fisher_f_distribution<double>(d1, d2), x);
}

double f_sf(double x, double d1, double d2) {
    require_positive(d1, "f_sf", "d1");
    require_positive(d2, "f_sf", "d2");
    if (!(x >= 0.0)) {
        throw DomainError("f_sf: x must be nonnegative");
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    return boost::math::cdf(
        boost::math::complement(boost::math::fisher_f_distribution<double>(d1, d2), x));
}

double f_quantile(double p, double d1, double d2) {
    require_probability(p, "f_quantile");
    require_positive(d1, "f_quantile", "d1");
    require_positive(d2, "f_quantile", "d2");
    const boost::math::fisher_f_distribution<double> dist(d1, d2);
    // Upper quantiles are taken through the complement to keep precision
    // for levels like 1 - alpha / m.
    if (p > 0.5) {
        return boost::math::quantile(boost::math::complement(dist, 1.0 - p));
    }
    return boost::math::quantile(dist, p);
}

double chi2_cdf(double x, double k) {
    require_positive(k, "chi2_cdf", "k");
    if (!(x >= 0.0)) {
        throw DomainError("chi2_cdf: x must be nonnegative");
    }
    if (std::isinf(x)) {
        return 1.0;
    }
    return boost::math::gamma_p(0.5 * k, 0.5 * x);
}

double chi2_sf(double x, double k) {
    require_positive(k, "chi2_sf", "k");
    if (!(x >= 0.0)) {
        throw DomainError("chi2_sf: x must be nonnegative");
    }
    if (std::isinf(x)) {
        return 0.0;
    }
    return boost::math::gamma_q(0.5 * k, 0.5 * x);
}

double chi2_quantile(double p, double k) {
    require_probability(p, "chi2_quantile");
    require_positive(k, "chi2_quantile", "k");
    const boost::math::chi_squared_distribution<double> dist(k);
    if (p > 0.5) {
        return boost::math::quantile(boost::math::complement(dist, 1.0 - p));
    }
    return boost::math::quantile(dist, p);
}

double normal_cdf(double x) {
    if (std::isnan(x)) {
        throw DomainError("normal_cdf: NaN argument");
    }
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double normal_sf(double x) {
    if (std::isnan(x)) {
        throw DomainError("normal_sf: NaN argument");
    }
    return 0.5 * std::erfc(x / std::numbers::sqrt2);
}

double normal_quantile(double p) {
    require_probability(p, "normal_quantile");
    const boost::math::normal_distribution<double> dist;
    if (p > 0.5) {
        return boost::math::quantile(boost::math::complement(dist, 1.0 - p));
    }
    return boost::math::quantile(dist, p);
}

double density_Z(double x, const ZDensityParams& params) {
    check_z_params(params);
    if (!(x >= 0.0)) {
        throw DomainError("density_Z: x must be nonnegative");
    }
    const double q = params.q;
    const double n = params.n;
    const double log_central = log_f_pdf(x, q, n);
    if (params.lambda == 0.0 || std::isinf(log_central)) {
        return std::exp(log_central);
    }
    const double half = 0.5 * (n + q);
    const double z = q * x / (n + q * x) * (params.lambda / (1.0 + params.lambda));
    const double log_value = log_central - half * std::log1p(params.lambda) +
                             ln_gauss_2f1(half, half, 0.5 * q, z);
    return std::exp(log_value);
}

double marginal_power_Z(double crit, const ZDensityParams& params) {
    check_z_params(params);
    if (!(crit >= 0.0)) {
        throw DomainError("marginal_power_Z: critical value must be nonnegative");
    }
    const double q = params.q;
    const double n = params.n;
    if (params.lambda == 0.0) {
        return f_sf(crit, q, n);
    }
    if (std::isinf(crit)) {
        return 0.0;
    }
    // Substituting u = qx/(n+qx) = sin^2(theta) maps the F_{q,n} law onto a
    // smooth density on [0, pi/2] for every q, n >= 1.
    const double half = 0.5 * (n + q);
    const double shrink = params.lambda / (1.0 + params.lambda);
    const double log_norm = std::log(2.0) - (ln_gamma(0.5 * q) + ln_gamma(0.5 * n) - ln_gamma(half)) -
                            half * std::log1p(params.lambda);
    const auto integrand = [&](double theta) {
        const double s = std::sin(theta);
        const double c = std::cos(theta);
        if (c <= 0.0 && n > 1.0) {
            return 0.0;
        }
        double log_value = log_norm + ln_gauss_2f1(half, half, 0.5 * q, s * s * shrink);
        if (q > 1.0) {
            if (s <= 0.0) {
                return 0.0;
            }
            log_value += (q - 1.0) * std::log(s);
        }
        if (n > 1.0) {
            log_value += (n - 1.0) * std::log(c);
        }
        return std::exp(log_value);
    };
    const double u_crit = q * crit / (n + q * crit);
    const double theta_crit = std::asin(std::sqrt(u_crit));
    const double upper = std::numbers::pi / 2.0;
    if (theta_crit >= upper) {
        return 0.0;
    }
    const QuadratureResult r = integrate_gauss_kronrod(integrand, theta_crit, upper, 1e-9, 1e-10, 4000);
    return std::clamp(r.value, 0.0, 1.0);
}

QuadratureResult integrate_gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                                         double abs_tol, double rel_tol, int max_intervals) {
    if (!(b >= a)) {
        throw DomainError("integrate_gauss_kronrod: require a <= b");
    }
    if (a == b) {
        return {};
    }
    std::priority_queue<Segment> work;
    Segment first = gauss_kronrod_15(f, a, b);
    double total = first.value;
    double error = first.error;
    work.push(first);
    int intervals = 1;
    while (error > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (intervals >= max_intervals) {
            throw NoConvergence("integrate_gauss_kronrod: error estimate " + std::to_string(error) +
                                " above tolerance after " + std::to_string(intervals) + " intervals");
        }
        const Segment worst = work.top();
        work.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Segment left = gauss_kronrod_15(f, worst.a, mid);
        const Segment right = gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        work.push(left);
        work.push(right);
        ++intervals;
    }
    // Re-sum to shed the drift of incremental updates.
    total = 0.0;
    error = 0.0;
    while (!work.empty()) {
        total += work.top().value;
        error += work.top().error;
        work.pop();
    }
    return {total, error, intervals};
}

}  // namespace factorlens::special
