#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "sparsefield/error.hpp"

namespace sparsefield {

/// Dense real matrix, row-major, 64-bit entries. Constructors reject
/// non-finite values; in-place mutation through operator() is unchecked.
class Matrix {
public:
    Matrix() : rows_(0), cols_(0) {}
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double at(std::size_t i, std::size_t j) const;

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    Matrix transposed() const;
    Matrix block(std::size_t row0, std::size_t col0, std::size_t nrows, std::size_t ncols) const;
    std::vector<double> row(std::size_t i) const;
    std::vector<double> col(std::size_t j) const;

    double frobenius_norm() const;
    bool all_finite() const;

    friend Matrix operator*(const Matrix& a, const Matrix& b);
    friend Matrix operator+(const Matrix& a, const Matrix& b);
    friend Matrix operator-(const Matrix& a, const Matrix& b);
    friend Matrix operator*(double s, const Matrix& a);
    friend bool operator==(const Matrix& a, const Matrix& b);

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

}  // namespace sparsefield
