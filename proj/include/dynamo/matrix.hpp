#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dynamo/error.hpp"

namespace dynamo {

// Dense row-major matrix of doubles. Rows are handed out as spans so the
// trackers can read sub-windows without copying.
class RowMatrix {
public:
    RowMatrix() = default;
    RowMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static RowMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        RowMatrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw DimensionError("ragged rows: row " + std::to_string(i) + " has " +
                                     std::to_string(rows[i].size()) + " columns, expected " +
                                     std::to_string(m.cols_));
            for (std::size_t h = 0; h < m.cols_; ++h) m(i, h) = rows[i][h];
        }
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

    void append_row(std::span<const double> values) {
        if (rows_ == 0 && cols_ == 0) cols_ = values.size();
        if (values.size() != cols_)
            throw DimensionError("append_row: expected " + std::to_string(cols_) + " columns, got " +
                                 std::to_string(values.size()));
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    friend bool operator==(const RowMatrix&, const RowMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Contiguous block of rows [first, first + count) of a RowMatrix, viewed
// without copying. Row indices are 0-based here.
class RowBlock {
public:
    RowBlock() = default;
    RowBlock(const RowMatrix& m, std::size_t first, std::size_t count)
        : base_(count == 0 ? nullptr : m.data().data() + first * m.cols()), rows_(count), cols_(m.cols()) {
        if (first + count > m.rows()) throw DimensionError("row block exceeds matrix bounds");
    }
    RowBlock(const double* base, std::size_t rows, std::size_t cols) : base_(base), rows_(rows), cols_(cols) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }
    double operator()(std::size_t r, std::size_t c) const { return base_[r * cols_ + c]; }
    std::span<const double> row(std::size_t r) const { return {base_ + r * cols_, cols_}; }

private:
    const double* base_ = nullptr;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
};

}  // namespace dynamo
