#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace geomc {

// rows x cols, row-major; one row per draw.
class SampleMatrix {
 public:
  SampleMatrix() = default;
  SampleMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  std::vector<double> column(std::size_t j) const {
    if (j >= cols_) throw std::out_of_range("SampleMatrix::column");
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = data_[i * cols_ + j];
    return out;
  }

  const std::vector<double>& data() const { return data_; }
  bool operator==(const SampleMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace geomc
