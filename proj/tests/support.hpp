#pragma once

// Test-side helpers: random inputs and independent numerical oracles that do
// not share code with the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "factorlens/linalg.hpp"

namespace testsupport {

/// A A^T + dim * I with A ~ N(0,1); well conditioned.
inline factorlens::linalg::SymMatrix random_spd(std::size_t dim, std::mt19937_64& gen, double ridge = 1.0) {
    std::normal_distribution<double> n01;
    std::vector<double> a(dim * dim);
    for (auto& v : a) {
        v = n01(gen);
    }
    factorlens::linalg::SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                s += a[i * dim + k] * a[j * dim + k];
            }
            m.set(i, j, s + (i == j ? ridge * static_cast<double>(dim) : 0.0));
        }
    }
    return m;
}

/// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    const double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int k = 1; k < n; ++k) {
        s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    }
    return s * h / 3.0;
}

/// Plain term-by-term 2F1 series in double precision, for moderate
/// parameters only.
inline double naive_2f1(double a, double b, double c, double z, int terms = 4000) {
    double term = 1.0;
    double sum = 1.0;
    for (int i = 0; i < terms; ++i) {
        term *= (a + i) * (b + i) / ((c + i) * (i + 1.0)) * z;
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) {
            break;
        }
    }
    return sum;
}

/// Regularized incomplete beta by Simpson on the beta density with the
/// substitution x = sin^2(theta); used as an F-cdf oracle.
inline double f_cdf_oracle(double x, double d1, double d2) {
    if (x <= 0.0) {
        return 0.0;
    }
    const double u = d1 * x / (d1 * x + d2);
    const double a = d1 / 2.0;
    const double b = d2 / 2.0;
    const double ln_beta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
    auto integrand = [&](double theta) {
        const double s = std::sin(theta);
        const double c = std::cos(theta);
        const double ls = 2.0 * a - 1.0 == 0.0 ? 0.0 : (2.0 * a - 1.0) * std::log(s);
        const double lc = 2.0 * b - 1.0 == 0.0 ? 0.0 : (2.0 * b - 1.0) * std::log(c);
        return 2.0 * std::exp(ls + lc - ln_beta);
    };
    return simpson(integrand, 0.0, std::asin(std::sqrt(u)), 20000);
}

/// Upper quantile by bisection on a monotone cdf.
inline double bisect_quantile(const std::function<double(double)>& cdf, double prob, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < prob ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace testsupport
