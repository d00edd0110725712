#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hebbdqn {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape& shape);
std::size_t ShapeProduct(const Shape& shape);

// Dense row-major array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Element access for rank-2 tensors.
  double& at(std::size_t row, std::size_t col) {
    return data_[row * shape_[1] + col];
  }
  double at(std::size_t row, std::size_t col) const {
    return data_[row * shape_[1] + col];
  }

  // Same data, new shape with equal element count.
  Tensor Reshaped(Shape shape) const;

  bool AllFinite() const;

  bool operator==(const Tensor& other) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// A graph value: tensor plus gradient buffer. Parameters are nodes that
// outlive any single tape.
struct Node {
  Tensor value;
  std::vector<double> grad;  // empty until populated by backward
  bool requires_grad = false;

  void EnsureGrad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
  bool has_grad() const { return grad.size() == value.size() && !grad.empty(); }
  void ClearGrad() { grad.clear(); }
};

using Var = std::shared_ptr<Node>;

Var Constant(Tensor value);
Var Leaf(Tensor value, bool requires_grad);

enum class OpKind {
  kMatmul,
  kAddBias,
  kAdd,
  kMul,
  kRelu,
  kConv2d,
  kMaxPool2x2,
  kFlatten,
  kScale,
  kConcat,
  kDropout,
  kDuelingCombine,
  kMseLoss,
};

const char* OpName(OpKind op);

// Records differentiable operations in execution order; Backward walks the
// records in exact reverse order.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Record {
    OpKind op;
    std::vector<Var> inputs;
    Var output;
    BackwardFn backward;
  };

  void Append(OpKind op, std::vector<Var> inputs, Var output, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable node.
  // Throws if `loss` is not a scalar or was not produced on this tape.
  void Backward(const Var& loss);

  void Clear() { records_.clear(); }
  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }

 private:
  std::vector<Record> records_;
};

// Named trainable tensor. Copies are deep: a copied parameter owns its own
// node.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value);
  Parameter(const Parameter& other);
  Parameter& operator=(const Parameter& other);
  Parameter(Parameter&&) noexcept = default;
  Parameter& operator=(Parameter&&) noexcept = default;

  const std::string& name() const { return name_; }
  const Var& var() const { return node_; }
  Tensor& value() { return node_->value; }
  const Tensor& value() const { return node_->value; }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }

  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen);

 private:
  std::string name_;
  Var node_;
  bool frozen_ = false;
};

}  // namespace hebbdqn
