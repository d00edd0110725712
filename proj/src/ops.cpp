#include "hebbdqn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <limits>

#include "hebbdqn/error.hpp"

namespace hebbdqn::ops {

namespace {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using ConstMapRM = Eigen::Map<const MatRM>;

bool Tracks(Tape* tape, std::initializer_list<const Var*> inputs) {
  if (tape == nullptr) return false;
  for (const Var* v : inputs) {
    if (*v && (*v)->requires_grad) return true;
  }
  return false;
}

Var MakeOutput(Tensor value, bool tracked) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = tracked;
  return node;
}

// Accumulates into input grads only for nodes that want them.
double* GradOf(const Var& v) {
  if (!v || !v->requires_grad) return nullptr;
  v->EnsureGrad();
  return v->grad.data();
}

[[noreturn]] void ShapeMismatch(const char* op, const Shape& a, const Shape& b) {
  Fail(ErrorKind::kShape, std::string(op) + ": incompatible shapes " +
                              ShapeString(a) + " and " + ShapeString(b));
}

void RequireRank(const char* op, const Var& v, std::size_t rank) {
  if (v->value.rank() != rank) {
    Fail(ErrorKind::kShape, std::string(op) + ": expected rank " +
                                std::to_string(rank) + " input, got " +
                                ShapeString(v->value.shape()));
  }
}

}  // namespace

Var Matmul(Tape* tape, const Var& a, const Var& b) {
  RequireRank("matmul", a, 2);
  RequireRank("matmul", b, 2);
  const std::size_t n = a->value.dim(0);
  const std::size_t k = a->value.dim(1);
  const std::size_t m = b->value.dim(1);
  if (b->value.dim(0) != k) ShapeMismatch("matmul", a->value.shape(), b->value.shape());

  Tensor out({n, m});
  MapRM(out.data().data(), n, m).noalias() =
      ConstMapRM(a->value.data().data(), n, k) *
      ConstMapRM(b->value.data().data(), k, m);

  const bool tracked = Tracks(tape, {&a, &b});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kMatmul, {a, b}, result, [a, b, out_node, n, k, m] {
      ConstMapRM dc(out_node->grad.data(), n, m);
      if (double* ga = GradOf(a)) {
        MapRM(ga, n, k).noalias() +=
            dc * ConstMapRM(b->value.data().data(), k, m).transpose();
      }
      if (double* gb = GradOf(b)) {
        MapRM(gb, k, m).noalias() +=
            ConstMapRM(a->value.data().data(), n, k).transpose() * dc;
      }
    });
  }
  return result;
}

Var AddBias(Tape* tape, const Var& x, const Var& bias) {
  RequireRank("add_bias", x, 2);
  RequireRank("add_bias", bias, 1);
  const std::size_t n = x->value.dim(0);
  const std::size_t m = x->value.dim(1);
  if (bias->value.dim(0) != m) ShapeMismatch("add_bias", x->value.shape(), bias->value.shape());

  Tensor out = x->value;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += bias->value[j];
  }
  const bool tracked = Tracks(tape, {&x, &bias});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kAddBias, {x, bias}, result, [x, bias, out_node, n, m] {
      const double* g = out_node->grad.data();
      if (double* gx = GradOf(x)) {
        for (std::size_t i = 0; i < n * m; ++i) gx[i] += g[i];
      }
      if (double* gb = GradOf(bias)) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
        }
      }
    });
  }
  return result;
}

Var Add(Tape* tape, const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) ShapeMismatch("add", a->value.shape(), b->value.shape());
  Tensor out = a->value;
  const std::size_t size = out.size();
  for (std::size_t i = 0; i < size; ++i) out[i] += b->value[i];
  const bool tracked = Tracks(tape, {&a, &b});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kAdd, {a, b}, result, [a, b, out_node, size] {
      const double* g = out_node->grad.data();
      if (double* ga = GradOf(a)) {
        for (std::size_t i = 0; i < size; ++i) ga[i] += g[i];
      }
      if (double* gb = GradOf(b)) {
        for (std::size_t i = 0; i < size; ++i) gb[i] += g[i];
      }
    });
  }
  return result;
}

Var Mul(Tape* tape, const Var& a, const Var& b) {
  if (a->value.shape() != b->value.shape()) ShapeMismatch("mul", a->value.shape(), b->value.shape());
  Tensor out = a->value;
  const std::size_t size = out.size();
  for (std::size_t i = 0; i < size; ++i) out[i] *= b->value[i];
  const bool tracked = Tracks(tape, {&a, &b});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kMul, {a, b}, result, [a, b, out_node, size] {
      const double* g = out_node->grad.data();
      if (double* ga = GradOf(a)) {
        for (std::size_t i = 0; i < size; ++i) ga[i] += g[i] * b->value[i];
      }
      if (double* gb = GradOf(b)) {
        for (std::size_t i = 0; i < size; ++i) gb[i] += g[i] * a->value[i];
      }
    });
  }
  return result;
}

Var Relu(Tape* tape, const Var& x) {
  Tensor out = x->value;
  for (double& v : out.storage()) v = v > 0.0 ? v : 0.0;
  const bool tracked = Tracks(tape, {&x});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kRelu, {x}, result, [x, out_node] {
      const double* g = out_node->grad.data();
      double* gx = GradOf(x);
      const std::size_t size = x->value.size();
      for (std::size_t i = 0; i < size; ++i) {
        if (x->value[i] > 0.0) gx[i] += g[i];
      }
    });
  }
  return result;
}

Var Scale(Tape* tape, const Var& x, double factor) {
  Tensor out = x->value;
  for (double& v : out.storage()) v *= factor;
  const bool tracked = Tracks(tape, {&x});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kScale, {x}, result, [x, out_node, factor] {
      const double* g = out_node->grad.data();
      double* gx = GradOf(x);
      const std::size_t size = x->value.size();
      for (std::size_t i = 0; i < size; ++i) gx[i] += g[i] * factor;
    });
  }
  return result;
}

namespace {

struct ConvGeometry {
  std::size_t n, c, h, w, f, kh, kw, stride, oh, ow;
  std::size_t patch() const { return c * kh * kw; }
  std::size_t pixels() const { return oh * ow; }
};

// col[(ci*kh + ky)*kw + kx][sample*pixels + oy*ow + ox]
void Im2Col(const ConvGeometry& g, const double* input, double* col) {
  const std::size_t cols = g.n * g.pixels();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = col + ((ci * g.kh + ky) * g.kw + kx) * cols;
        for (std::size_t s = 0; s < g.n; ++s) {
          const double* plane = input + (s * g.c + ci) * g.h * g.w;
          double* dst = row + s * g.pixels();
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            const double* src = plane + (oy * g.stride + ky) * g.w + kx;
            for (std::size_t ox = 0; ox < g.ow; ++ox) dst[oy * g.ow + ox] = src[ox * g.stride];
          }
        }
      }
    }
  }
}

void Col2ImAdd(const ConvGeometry& g, const double* col, double* input_grad) {
  const std::size_t cols = g.n * g.pixels();
  for (std::size_t ci = 0; ci < g.c; ++ci) {
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = col + ((ci * g.kh + ky) * g.kw + kx) * cols;
        for (std::size_t s = 0; s < g.n; ++s) {
          double* plane = input_grad + (s * g.c + ci) * g.h * g.w;
          const double* src = row + s * g.pixels();
          for (std::size_t oy = 0; oy < g.oh; ++oy) {
            double* dst = plane + (oy * g.stride + ky) * g.w + kx;
            for (std::size_t ox = 0; ox < g.ow; ++ox) dst[ox * g.stride] += src[oy * g.ow + ox];
          }
        }
      }
    }
  }
}

}  // namespace

Var Conv2d(Tape* tape, const Var& input, const Var& kernel, const Var& bias,
           std::size_t stride) {
  RequireRank("conv2d", input, 4);
  RequireRank("conv2d", kernel, 4);
  if (stride == 0) Fail(ErrorKind::kShape, "conv2d: stride must be positive");
  const Shape& is = input->value.shape();
  const Shape& ks = kernel->value.shape();
  if (ks[1] != is[1] || ks[2] > is[2] || ks[3] > is[3]) {
    ShapeMismatch("conv2d", is, ks);
  }
  if (bias && (bias->value.rank() != 1 || bias->value.dim(0) != ks[0])) {
    ShapeMismatch("conv2d", ks, bias->value.shape());
  }
  ConvGeometry g{is[0], is[1], is[2], is[3], ks[0], ks[2], ks[3], stride,
                 (is[2] - ks[2]) / stride + 1, (is[3] - ks[3]) / stride + 1};
  const std::size_t cols = g.n * g.pixels();

  // Fully overwritten by Im2Col, so left uninitialized.
  std::shared_ptr<double[]> col(new double[g.patch() * cols]);
  Im2Col(g, input->value.data().data(), col.get());

  MatRM product(g.f, cols);
  product.noalias() = ConstMapRM(kernel->value.data().data(), g.f, g.patch()) *
                      ConstMapRM(col.get(), g.patch(), cols);

  Tensor out({g.n, g.f, g.oh, g.ow});
  double* o = out.data().data();
  for (std::size_t s = 0; s < g.n; ++s) {
    for (std::size_t fi = 0; fi < g.f; ++fi) {
      const double b = bias ? bias->value[fi] : 0.0;
      const double* src = product.data() + fi * cols + s * g.pixels();
      double* dst = o + (s * g.f + fi) * g.pixels();
      for (std::size_t p = 0; p < g.pixels(); ++p) dst[p] = src[p] + b;
    }
  }

  const bool tracked = Tracks(tape, {&input, &kernel, &bias});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    std::vector<Var> inputs{input, kernel};
    if (bias) inputs.push_back(bias);
    tape->Append(OpKind::kConv2d, std::move(inputs), result,
                 [input, kernel, bias, out_node, g, col, cols] {
      const double* go = out_node->grad.data();
      MatRM dprod(g.f, cols);
      for (std::size_t s = 0; s < g.n; ++s) {
        for (std::size_t fi = 0; fi < g.f; ++fi) {
          const double* src = go + (s * g.f + fi) * g.pixels();
          std::copy(src, src + g.pixels(), dprod.data() + fi * cols + s * g.pixels());
        }
      }
      if (double* gb = GradOf(bias)) {
        for (std::size_t fi = 0; fi < g.f; ++fi) gb[fi] += dprod.row(fi).sum();
      }
      if (double* gk = GradOf(kernel)) {
        MapRM(gk, g.f, g.patch()).noalias() +=
            dprod * ConstMapRM(col.get(), g.patch(), cols).transpose();
      }
      if (double* gi = GradOf(input)) {
        MatRM dcol(g.patch(), cols);
        dcol.noalias() =
            ConstMapRM(kernel->value.data().data(), g.f, g.patch()).transpose() * dprod;
        Col2ImAdd(g, dcol.data(), gi);
      }
    });
  }
  return result;
}

Var MaxPool2x2(Tape* tape, const Var& x) {
  RequireRank("maxpool2x2", x, 4);
  const Shape& s = x->value.shape();
  if (s[2] < 2 || s[3] < 2) {
    Fail(ErrorKind::kShape, "maxpool2x2: spatial dims must be >= 2, got " + ShapeString(s));
  }
  const std::size_t oh = s[2] / 2;
  const std::size_t ow = s[3] / 2;
  Tensor out({s[0], s[1], oh, ow});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  const double* in = x->value.data().data();
  for (std::size_t plane = 0; plane < s[0] * s[1]; ++plane) {
    const std::size_t base = plane * s[2] * s[3];
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        std::size_t best = base + (2 * oy) * s[3] + 2 * ox;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = base + (2 * oy + dy) * s[3] + 2 * ox + dx;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (plane * oh + oy) * ow + ox;
        out[o] = in[best];
        (*argmax)[o] = best;
      }
    }
  }
  const bool tracked = Tracks(tape, {&x});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kMaxPool2x2, {x}, result, [x, out_node, argmax] {
      double* gx = GradOf(x);
      const double* g = out_node->grad.data();
      for (std::size_t o = 0; o < argmax->size(); ++o) gx[(*argmax)[o]] += g[o];
    });
  }
  return result;
}

Var Flatten(Tape* tape, const Var& x) {
  if (x->value.rank() < 2) {
    Fail(ErrorKind::kShape, "flatten: expected rank >= 2, got " + ShapeString(x->value.shape()));
  }
  const std::size_t n = x->value.dim(0);
  Tensor out = x->value.Reshaped({n, x->value.size() / n});
  const bool tracked = Tracks(tape, {&x});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kFlatten, {x}, result, [x, out_node] {
      double* gx = GradOf(x);
      const std::size_t size = x->value.size();
      for (std::size_t i = 0; i < size; ++i) gx[i] += out_node->grad[i];
    });
  }
  return result;
}

Var Concat(Tape* tape, const std::vector<Var>& parts) {
  if (parts.empty()) Fail(ErrorKind::kShape, "concat: no inputs");
  const std::size_t n = parts.front()->value.rank() == 2 ? parts.front()->value.dim(0) : 0;
  std::size_t total = 0;
  bool tracked = false;
  for (const Var& p : parts) {
    RequireRank("concat", p, 2);
    if (p->value.dim(0) != n) ShapeMismatch("concat", parts.front()->value.shape(), p->value.shape());
    total += p->value.dim(1);
    tracked = tracked || (tape != nullptr && p->requires_grad);
  }
  Tensor out({n, total});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t m = p->value.dim(1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) out[i * total + offset + j] = p->value[i * m + j];
    }
    offset += m;
  }
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kConcat, parts, result, [parts, out_node, n, total] {
      std::size_t off = 0;
      for (const Var& p : parts) {
        const std::size_t m = p->value.dim(1);
        if (double* gp = GradOf(p)) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) gp[i * m + j] += out_node->grad[i * total + off + j];
          }
        }
        off += m;
      }
    });
  }
  return result;
}

Var DropoutWithMask(Tape* tape, const Var& x, const std::vector<double>& keep,
                    double rate) {
  if (keep.size() != x->value.size()) {
    Fail(ErrorKind::kShape, "dropout: mask has " + std::to_string(keep.size()) +
                                " entries for input " + ShapeString(x->value.shape()));
  }
  if (!(rate >= 0.0 && rate < 1.0)) Fail(ErrorKind::kUsage, "dropout rate must lie in [0, 1)");
  const double scale = 1.0 / (1.0 - rate);
  auto factors = std::make_shared<std::vector<double>>(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) (*factors)[i] = keep[i] != 0.0 ? scale : 0.0;
  Tensor out = x->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*factors)[i];
  const bool tracked = Tracks(tape, {&x});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kDropout, {x}, result, [x, out_node, factors] {
      double* gx = GradOf(x);
      for (std::size_t i = 0; i < factors->size(); ++i) gx[i] += out_node->grad[i] * (*factors)[i];
    });
  }
  return result;
}

Var Dropout(Tape* tape, const Var& x, double rate, bool training, Rng& rng) {
  if (!training || rate == 0.0) return x;
  std::vector<double> keep(x->value.size());
  for (double& k : keep) k = rng.Uniform() >= rate ? 1.0 : 0.0;
  return DropoutWithMask(tape, x, keep, rate);
}

Var DuelingCombine(Tape* tape, const Var& value, const Var& advantage) {
  RequireRank("dueling_combine", value, 2);
  RequireRank("dueling_combine", advantage, 2);
  const std::size_t n = advantage->value.dim(0);
  const std::size_t a = advantage->value.dim(1);
  if (value->value.dim(0) != n || value->value.dim(1) != 1) {
    ShapeMismatch("dueling_combine", value->value.shape(), advantage->value.shape());
  }
  Tensor out({n, a});
  auto best = std::make_shared<std::vector<std::size_t>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = advantage->value.data().data() + i * a;
    std::size_t arg = 0;
    for (std::size_t j = 1; j < a; ++j) {
      if (row[j] > row[arg]) arg = j;
    }
    (*best)[i] = arg;
    const double v = value->value[i];
    for (std::size_t j = 0; j < a; ++j) out[i * a + j] = v + (row[j] - row[arg]);
  }
  const bool tracked = Tracks(tape, {&value, &advantage});
  Var result = MakeOutput(std::move(out), tracked);
  if (tracked) {
    Node* out_node = result.get();
    tape->Append(OpKind::kDuelingCombine, {value, advantage}, result,
                 [value, advantage, out_node, best, n, a] {
      const double* g = out_node->grad.data();
      double* gv = GradOf(value);
      double* ga = GradOf(advantage);
      for (std::size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < a; ++j) row_sum += g[i * a + j];
        if (gv) gv[i] += row_sum;
        if (ga) {
          for (std::size_t j = 0; j < a; ++j) ga[i * a + j] += g[i * a + j];
          ga[i * a + (*best)[i]] -= row_sum;
        }
      }
    });
  }
  return result;
}

Var MseLoss(Tape* tape, const Var& pred, const Tensor& target, const Tensor* mask) {
  if (pred->value.shape() != target.shape()) ShapeMismatch("mse_loss", pred->value.shape(), target.shape());
  if (mask && mask->shape() != target.shape()) ShapeMismatch("mse_loss", target.shape(), mask->shape());
  if (pred->value.rank() == 0) Fail(ErrorKind::kShape, "mse_loss: prediction has no batch axis");
  const std::size_t size = pred->value.size();
  const double batch = static_cast<double>(pred->value.dim(0));
  auto residual = std::make_shared<std::vector<double>>(size);
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double m = mask ? (*mask)[i] : 1.0;
    const double r = m * (pred->value[i] - target[i]);
    (*residual)[i] = r;
    total += r * r;
  }
  const bool tracked = Tracks(tape, {&pred});
  Var result = MakeOutput(Tensor({1}, std::vector<double>{total / batch}), tracked);
  if (tracked) {
    Node* out_node = result.get();
    std::vector<double> mask_copy = mask ? mask->storage() : std::vector<double>();
    tape->Append(OpKind::kMseLoss, {pred}, result,
                 [pred, out_node, residual, batch, mask_copy = std::move(mask_copy)] {
      double* gp = GradOf(pred);
      const double g = out_node->grad[0];
      for (std::size_t i = 0; i < residual->size(); ++i) {
        const double m = mask_copy.empty() ? 1.0 : mask_copy[i];
        gp[i] += g * 2.0 * m * (*residual)[i] / batch;
      }
    });
  }
  return result;
}

}  // namespace hebbdqn::ops
