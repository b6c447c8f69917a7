#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "srnn/error.hpp"

namespace srnn {

// Dense row-major matrix. Rows are contiguous so a row can be handed out as a span,
// which is how presynaptic fan-out rows are added into a drive vector.
template <typename Real>
class BasicMatrix {
public:
    BasicMatrix() = default;
    BasicMatrix(std::size_t rows, std::size_t cols, Real fill = Real(0))
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    Real& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    Real operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<Real> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<const Real> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

    std::vector<Real>& data() noexcept { return data_; }
    const std::vector<Real>& data() const noexcept { return data_; }

    void fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename Other>
    BasicMatrix<Other> cast() const {
        BasicMatrix<Other> out(rows_, cols_);
        std::transform(data_.begin(), data_.end(), out.data().begin(),
                       [](Real v) { return static_cast<Other>(v); });
        return out;
    }

    friend bool operator==(const BasicMatrix&, const BasicMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Real> data_;
};

using Matrix = BasicMatrix<double>;

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) throw ShapeError(what);
}

// y += a * x
template <typename Real>
inline void axpy(Real a, std::span<const Real> x, std::span<Real> y) noexcept {
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename Real>
inline Real dot(std::span<const Real> x, std::span<const Real> y) noexcept {
    Real acc = 0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

}  // namespace srnn
