#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lista {

using Vector = std::vector<double>;
using IndexSet = std::vector<int>;  // sorted ascending, unique

/// Dense row-major matrix of doubles. Contiguous storage, rows are spans.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Column slice copy: columns of `m` listed in `idx`, in order.
inline Matrix select_columns(const Matrix& m, const IndexSet& idx) {
    Matrix out(m.rows(), idx.size());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            out(i, j) = m(i, static_cast<std::size_t>(idx[j]));
    return out;
}

}  // namespace lista
