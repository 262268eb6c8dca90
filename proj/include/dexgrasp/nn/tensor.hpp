#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dexgrasp::nn {

/// Row-major dense matrix used for all tape values.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense float64 array, row-major, with an optional gradient buffer.
///
/// Ranks 0..2 are supported by the math; rank 0 views as 1x1 and rank 1 as a
/// single row. Learnable parameters are plain tensors whose `grad` is filled
/// by `Tape::backward`.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor from_matrix(const Matrix& m);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  MatrixMap matrix();
  ConstMatrixMap matrix() const;

  bool has_grad() const { return grad_.has_value(); }
  /// Allocates a zero gradient if absent.
  std::span<double> grad();
  std::span<const double> grad() const;
  MatrixMap grad_matrix();
  void zero_grad();
  void drop_grad() { grad_.reset(); }

  bool operator==(const Tensor& other) const {
    return shape_ == other.shape_ && data_ == other.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
  std::optional<std::vector<double>> grad_;
};

/// Non-owning reference to a named learnable tensor.
struct ParamRef {
  std::string name;
  Tensor* tensor;
};
using ParamList = std::vector<ParamRef>;

void zero_grads(const ParamList& params);

}  // namespace dexgrasp::nn
