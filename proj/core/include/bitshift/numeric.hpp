#pragma once

#include <cmath>
#include <numbers>
#include <span>

namespace bitshift {

inline constexpr double kLn2 = std::numbers::ln2;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double initial) : sum_(initial) {}

  void add(double value) {
    const double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      correction_ += (sum_ - t) + value;
    } else {
      correction_ += (value - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + correction_; }

 private:
  double sum_ = 0.0;
  double correction_ = 0.0;
};

// -x ln x with 0 ln 0 = 0.
inline double neg_x_log_x(double x) { return x > 0.0 ? -x * std::log(x) : 0.0; }

// Shannon entropy in nats of a (not necessarily normalized) nonnegative vector,
// normalized by its total mass.
double entropy_nats(std::span<const double> weights);

inline double entropy_bits(std::span<const double> weights) {
  return entropy_nats(weights) / kLn2;
}

}  // namespace bitshift

#include <cstddef>
#include <vector>

namespace bitshift {

// Dense row-major matrix; sizes in this library stay in the hundreds.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<const double> data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace bitshift
