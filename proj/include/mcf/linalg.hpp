#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcf {

/// Largest embedding dimension handled on the stack.
inline constexpr int kMaxDim = 8;
/// Largest intrinsic dimension.
inline constexpr int kMaxN = 4;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using SmallMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxN, kMaxN>;

// Error categories. The CLI maps InputError/SpecError/ConfigError to exit
// code 2 and everything else to 3.
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SpecError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct FrameError : std::domain_error {
  using std::domain_error::domain_error;
};
struct ChartError : std::domain_error {
  using std::domain_error::domain_error;
};
struct DegeneracyError : std::domain_error {
  DegeneracyError(const std::string& what, long node = -1)
      : std::domain_error(what), node(node) {}
  long node;
};

/// Execution policy for per-node kernels.
enum class Exec { serial, parallel };

/// Dense 4-index array with runtime extent m (m^4 entries).
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int m) : m_(m), data_(static_cast<size_t>(m) * m * m * m, 0.0) {}
  int extent() const { return m_; }
  double& operator()(int a, int b, int c, int d) { return data_[((a * m_ + b) * m_ + c) * m_ + d]; }
  double operator()(int a, int b, int c, int d) const {
    return data_[((a * m_ + b) * m_ + c) * m_ + d];
  }
  double max_abs() const {
    double r = 0;
    for (double v : data_) r = std::max(r, std::abs(v));
    return r;
  }

 private:
  int m_ = 0;
  std::vector<double> data_;
};

/// Dense 5-index array, first index is the differentiation direction.
class Tensor5 {
 public:
  Tensor5() = default;
  explicit Tensor5(int m) : m_(m), data_(static_cast<size_t>(m) * m * m * m * m, 0.0) {}
  int extent() const { return m_; }
  double& operator()(int e, int a, int b, int c, int d) {
    return data_[(((e * m_ + a) * m_ + b) * m_ + c) * m_ + d];
  }
  double operator()(int e, int a, int b, int c, int d) const {
    return data_[(((e * m_ + a) * m_ + b) * m_ + c) * m_ + d];
  }
  double max_abs() const {
    double r = 0;
    for (double v : data_) r = std::max(r, std::abs(v));
    return r;
  }
  double norm() const {
    double r = 0;
    for (double v : data_) r += v * v;
    return std::sqrt(r);
  }

 private:
  int m_ = 0;
  std::vector<double> data_;
};

}  // namespace mcf
