#include "hebbdqn/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "hebbdqn/error.hpp"

namespace hebbdqn {

std::string ShapeString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t ShapeProduct(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(ShapeProduct(shape_), fill) {
  for (std::size_t d : shape_) {
    if (d == 0) Fail(ErrorKind::kShape, "tensor dimensions must be positive: " + ShapeString(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (ShapeProduct(shape_) != data_.size()) {
    Fail(ErrorKind::kShape, "shape " + ShapeString(shape_) + " does not match " +
                                std::to_string(data_.size()) + " elements");
  }
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (ShapeProduct(shape) != data_.size()) {
    Fail(ErrorKind::kShape, "cannot reshape " + ShapeString(shape_) + " to " +
                                ShapeString(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::AllFinite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

Var Constant(Tensor value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return node;
}

Var Leaf(Tensor value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

const char* OpName(OpKind op) {
  switch (op) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kAddBias: return "add_bias";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kRelu: return "relu";
    case OpKind::kConv2d: return "conv2d";
    case OpKind::kMaxPool2x2: return "maxpool2x2";
    case OpKind::kFlatten: return "flatten";
    case OpKind::kScale: return "scale";
    case OpKind::kConcat: return "concat";
    case OpKind::kDropout: return "dropout";
    case OpKind::kDuelingCombine: return "dueling_combine";
    case OpKind::kMseLoss: return "mse_loss";
  }
  return "unknown";
}

void Tape::Append(OpKind op, std::vector<Var> inputs, Var output, BackwardFn fn) {
  records_.push_back({op, std::move(inputs), std::move(output), std::move(fn)});
}

void Tape::Backward(const Var& loss) {
  if (!loss || loss->value.size() != 1) {
    Fail(ErrorKind::kShape, "backward requires a scalar loss, got " +
                                (loss ? ShapeString(loss->value.shape()) : "null"));
  }
  bool on_tape = false;
  for (const auto& record : records_) {
    if (record.output == loss) {
      on_tape = true;
      break;
    }
  }
  if (!on_tape) {
    Fail(ErrorKind::kState, "loss was not produced by an operation on this tape");
  }
  // Intermediates start from zero so repeated backward calls stay isolated.
  for (const auto& record : records_) record.output->grad.assign(record.output->value.size(), 0.0);
  loss->grad.assign(1, 1.0);
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    it->backward();
  }
}

Parameter::Parameter(std::string name, Tensor value)
    : name_(std::move(name)), node_(Leaf(std::move(value), true)) {}

Parameter::Parameter(const Parameter& other)
    : name_(other.name_),
      node_(other.node_ ? std::make_shared<Node>(*other.node_) : nullptr),
      frozen_(other.frozen_) {}

Parameter& Parameter::operator=(const Parameter& other) {
  if (this != &other) {
    name_ = other.name_;
    node_ = other.node_ ? std::make_shared<Node>(*other.node_) : nullptr;
    frozen_ = other.frozen_;
  }
  return *this;
}

void Parameter::set_frozen(bool frozen) {
  frozen_ = frozen;
  node_->requires_grad = !frozen;
  if (frozen) node_->ClearGrad();
}

}  // namespace hebbdqn
