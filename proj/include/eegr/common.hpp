#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegr {

// Thrown when a caller-supplied parameter set is structurally invalid
// (cutoff above Nyquist, malformed config file, unknown keys, ...).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major matrix of doubles. Small helper used by the neural ops;
// channel sample data lives in per-channel vectors instead.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols()) throw std::invalid_argument("ragged row list");
        for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
    }
    return m;
}

double median(std::vector<double> v);

// 1.4826 * median(|x - median(x)|): robust scale consistent with the
// standard deviation under a normal model.
double robust_sigma(const std::vector<double>& v);

}  // namespace eegr
