#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "tomosar/error.hpp"

namespace tomosar {

using Complex = std::complex<double>;

struct Pixel {
    std::ptrdiff_t row = 0;
    std::ptrdiff_t col = 0;
};

/// Dense row-major 2-D array.
template <class T>
class Raster {
public:
    Raster() = default;
    Raster(std::size_t rows, std::size_t cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const Raster& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    template <class U>
    bool same_shape(const Raster<U>& other) const {
        return rows_ == other.rows() && cols_ == other.cols();
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

}  // namespace tomosar
