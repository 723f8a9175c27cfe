#include "factorlens/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "factorlens/errors.hpp"

namespace factorlens::linalg {

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : dim_(rows.size()), data_(rows.size() * rows.size(), 0.0) {
    std::vector<double> dense;
    dense.reserve(dim_ * dim_);
    for (const auto& r : rows) {
        if (r.size() != dim_) {
            throw BadDimension("SymMatrix: ragged initializer");
        }
        dense.insert(dense.end(), r.begin(), r.end());
    }
    *this = from_dense(dim_, dense);
}

SymMatrix SymMatrix::identity(std::size_t dim) {
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        m.data_[i * dim + i] = 1.0;
    }
    return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
    SymMatrix m(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m.data_[i * diag.size() + i] = diag[i];
    }
    return m;
}

SymMatrix SymMatrix::from_dense(std::size_t dim, std::span<const double> values) {
    if (values.size() != dim * dim) {
        throw BadDimension("SymMatrix::from_dense: expected " + std::to_string(dim * dim) +
                           " values, got " + std::to_string(values.size()));
    }
    double scale = 0.0;
    for (double v : values) {
        scale = std::max(scale, std::abs(v));
    }
    SymMatrix m(dim);
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i; j < dim; ++j) {
            const double upper = values[i * dim + j];
            const double lower = values[j * dim + i];
            if (std::abs(upper - lower) > 1e-12 * scale) {
                throw DomainError("SymMatrix::from_dense: input is not symmetric at (" +
                                  std::to_string(i) + "," + std::to_string(j) + ")");
            }
            m.set(i, j, upper);
        }
    }
    return m;
}

std::vector<double> SymMatrix::diag() const {
    std::vector<double> d(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        d[i] = data_[i * dim_ + i];
    }
    return d;
}

double SymMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

SymMatrix SymMatrix::scaled(std::span<const double> scale) const {
    if (scale.size() != dim_) {
        throw BadDimension("SymMatrix::scaled: scale length mismatch");
    }
    SymMatrix out(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = 0; j < dim_; ++j) {
            out.data_[i * dim_ + j] = scale[i] * data_[i * dim_ + j] * scale[j];
        }
    }
    return out;
}

LowerTriangular cholesky(const SymMatrix& m) {
    const std::size_t n = m.dim();
    if (n == 0) {
        throw BadDimension("cholesky: empty matrix");
    }
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        max_diag = std::max(max_diag, m(i, i));
    }
    const double floor = kPivotTolerance * max_diag;

    LowerTriangular l(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            const auto li = l.row(i);
            const auto lj = l.row(j);
            for (std::size_t k = 0; k < j; ++k) {
                s -= li[k] * lj[k];
            }
            if (i == j) {
                if (!(s > floor)) {
                    throw NotPositiveDefinite("cholesky: pivot " + std::to_string(i) +
                                              " is not positive (" + std::to_string(s) + ")");
                }
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

SymMatrix gram(const LowerTriangular& l) {
    const std::size_t n = l.dim();
    SymMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto li = l.row(i);
        for (std::size_t j = 0; j <= i; ++j) {
            const auto lj = l.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k <= j; ++k) {
                s += li[k] * lj[k];
            }
            out.set(i, j, s);
        }
    }
    return out;
}

LowerTriangular invert_lower(const LowerTriangular& l) {
    const std::size_t n = l.dim();
    LowerTriangular x(n);
    std::vector<double> acc(n);
    // Row i of X solves sum_k L(i,k) X(k,j) = delta_ij; rows k < i are known.
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(acc.begin(), acc.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
        for (std::size_t k = 0; k < i; ++k) {
            const double a = l(i, k);
            const auto xk = x.row(k);
            for (std::size_t j = 0; j <= k; ++j) {
                acc[j] += a * xk[j];
            }
        }
        const double inv_diag = 1.0 / l(i, i);
        for (std::size_t j = 0; j < i; ++j) {
            x.at(i, j) = -acc[j] * inv_diag;
        }
        x.at(i, i) = inv_diag;
    }
    return x;
}

SymMatrix inverse_from_cholesky(const LowerTriangular& l) {
    const std::size_t n = l.dim();
    const LowerTriangular x = invert_lower(l);
    // (L L^T)^{-1} = X^T X, accumulated row by row of X.
    std::vector<double> lower(n * n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto xk = x.row(k);
        for (std::size_t i = 0; i <= k; ++i) {
            const double a = xk[i];
            double* out = lower.data() + i * n;
            for (std::size_t j = 0; j <= i; ++j) {
                out[j] += a * xk[j];
            }
        }
    }
    SymMatrix inv(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            inv.set(i, j, lower[i * n + j]);
        }
    }
    return inv;
}

SymMatrix invert_spd(const SymMatrix& m) { return inverse_from_cholesky(cholesky(m)); }

double log_det_from_cholesky(const LowerTriangular& l) {
    double s = 0.0;
    for (std::size_t i = 0; i < l.dim(); ++i) {
        s += std::log(l(i, i));
    }
    return 2.0 * s;
}

double log_det_spd(const SymMatrix& m) { return log_det_from_cholesky(cholesky(m)); }

SymMatrix correlation_from_spd(const SymMatrix& m) {
    const std::size_t n = m.dim();
    std::vector<double> scale(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(m(i, i) > 0.0)) {
            throw NotPositiveDefinite("correlation_from_spd: diagonal entry " + std::to_string(i) +
                                      " is not positive");
        }
        scale[i] = 1.0 / std::sqrt(m(i, i));
    }
    SymMatrix r = m.scaled(scale);
    for (std::size_t i = 0; i < n; ++i) {
        r.set(i, i, 1.0);
    }
    return r;
}

SymMatrix top_left_block(const SymMatrix& m, std::size_t k) {
    if (k < 1 || k > m.dim()) {
        throw BadDimension("top_left_block: k=" + std::to_string(k) + " outside [1, " +
                           std::to_string(m.dim()) + "]");
    }
    SymMatrix out(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
            out.set(i, j, m(i, j));
        }
    }
    return out;
}

std::vector<double> lower_times(const LowerTriangular& l, std::span<const double> x) {
    if (x.size() != l.dim()) {
        throw BadDimension("lower_times: vector length mismatch");
    }
    std::vector<double> y(l.dim(), 0.0);
    for (std::size_t i = 0; i < l.dim(); ++i) {
        const auto li = l.row(i);
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) {
            s += li[k] * x[k];
        }
        y[i] = s;
    }
    return y;
}

Matrix multiply(const SymMatrix& a, const SymMatrix& b) {
    if (a.dim() != b.dim()) {
        throw BadDimension("multiply: dimension mismatch");
    }
    const std::size_t n = a.dim();
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a(i, k);
            const auto bk = b.row(k);
            for (std::size_t j = 0; j < n; ++j) {
                out(i, j) += aik * bk[j];
            }
        }
    }
    return out;
}

}  // namespace factorlens::linalg
