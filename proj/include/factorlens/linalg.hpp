#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace factorlens::linalg {

/// Dense general matrix, row-major. Used for data panels (series x time).
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Dense symmetric matrix. Full row-major storage; every write is mirrored so
/// entries(i,j) == entries(j,i) holds exactly.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}
    SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

    static SymMatrix identity(std::size_t dim);
    static SymMatrix diagonal(std::span<const double> diag);
    /// Builds from a dense row-major buffer. Throws DomainError when the
    /// buffer is not symmetric to 1e-12 relative; the upper triangle wins.
    static SymMatrix from_dense(std::size_t dim, std::span<const double> values);

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }
    void set(std::size_t i, std::size_t j, double v) noexcept {
        data_[i * dim_ + j] = v;
        data_[j * dim_ + i] = v;
    }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<const double> data() const noexcept { return data_; }

    std::vector<double> diag() const;
    double max_abs() const noexcept;

    /// D * this * D for D = diag(scale).
    SymMatrix scaled(std::span<const double> scale) const;

    bool operator==(const SymMatrix&) const = default;

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Lower-triangular factor with strictly positive diagonal.
class LowerTriangular {
public:
    LowerTriangular() = default;
    explicit LowerTriangular(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {}

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }
    double& at(std::size_t i, std::size_t j) noexcept { return data_[i * dim_ + j]; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * dim_, i + 1};
    }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

/// Relative pivot floor: a pivot at or below this times the largest diagonal
/// entry is treated as loss of positive definiteness.
inline constexpr double kPivotTolerance = 1e-12;

LowerTriangular cholesky(const SymMatrix& m);

/// L * L^T.
SymMatrix gram(const LowerTriangular& l);

/// (L L^T)^{-1} from the factor.
SymMatrix inverse_from_cholesky(const LowerTriangular& l);

/// Inverse of a lower-triangular matrix (also lower triangular; its diagonal
/// is positive when the input's is).
LowerTriangular invert_lower(const LowerTriangular& l);

SymMatrix invert_spd(const SymMatrix& m);

/// 2 * sum(ln L_ii).
double log_det_from_cholesky(const LowerTriangular& l);
double log_det_spd(const SymMatrix& m);

SymMatrix correlation_from_spd(const SymMatrix& m);

/// Leading k x k principal submatrix.
SymMatrix top_left_block(const SymMatrix& m, std::size_t k);

/// y = L x.
std::vector<double> lower_times(const LowerTriangular& l, std::span<const double> x);

/// Product of two symmetric matrices (general result). Test and diagnostic use.
Matrix multiply(const SymMatrix& a, const SymMatrix& b);

}  // namespace factorlens::linalg
