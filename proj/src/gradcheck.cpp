#include "hebbdqn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "hebbdqn/error.hpp"
#include "hebbdqn/network.hpp"
#include "hebbdqn/ops.hpp"
#include "hebbdqn/rng.hpp"

namespace hebbdqn {

namespace {

Var Scalarize(Tape* tape, const Var& out, const Tensor& weights) {
  if (out->value.size() == 1) return out;
  if (out->value.rank() < 2) Fail(ErrorKind::kShape, "gradcheck: outputs must be scalar or rank >= 2");
  Var flat = ops::Flatten(tape, out);
  const std::size_t rows = flat->value.dim(0);
  const std::size_t cols = flat->value.dim(1);
  Var w = Constant(Tensor({cols, 1}, std::vector<double>(weights.data().begin(), weights.data().begin() + cols)));
  Var per_row = ops::Matmul(tape, flat, w);
  Tensor row_weights({1, rows});
  for (std::size_t r = 0; r < rows; ++r) row_weights[r] = weights[cols + r];
  return ops::Matmul(tape, Constant(std::move(row_weights)), per_row);
}

double Evaluate(const GradFn& fn, const std::vector<Var>& inputs, const Tensor& weights) {
  return Scalarize(nullptr, fn(nullptr, inputs), weights)->value[0];
}

Tensor RandomTensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = rng.Uniform(lo, hi);
  return t;
}

// Values bounded away from zero so relu kinks stay out of reach of h.
Tensor AwayFromZero(Shape shape, Rng& rng) {
  Tensor t(std::move(shape));
  for (double& v : t.data()) {
    const double m = rng.Uniform(0.1, 1.0);
    v = rng.Bernoulli(0.5) ? m : -m;
  }
  return t;
}

GradcheckResult CheckNetwork(const std::string& name, agent::NetworkSpec spec, std::uint64_t seed,
                             double tolerance, bool plastic_phase) {
  agent::QNetwork net(spec, seed);
  Rng rng(Rng::Derive(seed, 99));
  // Zero biases put dead units' successors exactly on a relu kink, where
  // every central difference is symmetric and hides the subgradient choice.
  for (Parameter* p : net.Parameters()) {
    if (p->name().ends_with(".bias")) {
      for (double& v : p->value().data()) v = rng.Uniform(-0.5, 0.5);
    }
  }
  if (plastic_phase) {
    net.BeginPlasticPhase();
    for (auto* layer : net.PlasticLayers()) {
      for (double& v : layer->hebb()->value().data()) v = rng.Uniform(-0.5, 0.5);
    }
  }
  Shape in_shape{3};
  in_shape.insert(in_shape.end(), spec.input_shape.begin(), spec.input_shape.end());
  const Tensor states = RandomTensor(in_shape, rng, 0.0, 1.0);
  Tensor target = RandomTensor({3, spec.n_actions}, rng);
  Tensor mask({3, spec.n_actions});
  for (std::size_t i = 0; i < 3; ++i) mask.at(i, rng.Index(spec.n_actions)) = 1.0;

  std::vector<Var> inputs;
  for (Parameter* p : net.Parameters()) {
    if (!p->frozen()) inputs.push_back(p->var());
  }
  const GradFn fn = [&](Tape* tape, const std::vector<Var>&) {
    return ops::MseLoss(tape, net.Forward(tape, states), target, &mask);
  };
  return CheckGradients(name, fn, inputs, seed, tolerance);
}

}  // namespace

GradcheckResult CheckGradients(const std::string& name, const GradFn& fn, std::vector<Var> inputs,
                               std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  for (const Var& v : inputs) {
    v->requires_grad = true;
    v->ClearGrad();
  }
  Tape tape;
  Var out = fn(&tape, inputs);
  Tensor weights({out->value.size() + (out->value.rank() >= 1 ? out->value.dim(0) : 0)});
  for (double& w : weights.data()) w = rng.Uniform(-1.0, 1.0);
  Var loss = Scalarize(&tape, out, weights);
  tape.Backward(loss);

  GradcheckResult result;
  result.name = name;
  for (const Var& v : inputs) {
    std::vector<double> analytic = v->grad;
    if (analytic.size() != v->value.size()) analytic.assign(v->value.size(), 0.0);
    for (std::size_t i = 0; i < v->value.size(); ++i) {
      const double original = v->value[i];
      const auto central = [&](double h) {
        v->value[i] = original + h;
        const double plus = Evaluate(fn, inputs, weights);
        v->value[i] = original - h;
        const double minus = Evaluate(fn, inputs, weights);
        v->value[i] = original;
        return (plus - minus) / (2.0 * h);
      };
      const auto smooth = [](double a, double b) {
        return std::abs(a - b) <= kGradcheckKink * std::max({std::abs(a), std::abs(b), kGradcheckFloor});
      };
      double numeric = central(kGradcheckStep);
      if (!smooth(numeric, central(0.5 * kGradcheckStep))) {
        numeric = central(0.1 * kGradcheckStep);
        if (!smooth(numeric, central(0.05 * kGradcheckStep))) {
          ++result.entries_skipped;
          continue;
        }
      }
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), kGradcheckFloor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(analytic[i] - numeric) / denom);
      ++result.entries_checked;
    }
    v->ClearGrad();
  }
  const auto total = static_cast<double>(result.entries_checked + result.entries_skipped);
  result.passed = result.max_relative_error < tolerance && result.entries_checked > 0 &&
                  static_cast<double>(result.entries_skipped) <= kGradcheckMaxSkipped * total;
  return result;
}

std::vector<GradcheckResult> RunAllGradchecks(std::uint64_t seed, double tolerance) {
  Rng rng(seed);
  std::vector<GradcheckResult> results;
  const auto leaf = [](Tensor t) { return Leaf(std::move(t), true); };
  const auto check = [&](const std::string& name, const GradFn& fn, std::vector<Var> inputs) {
    results.push_back(CheckGradients(name, fn, std::move(inputs), Rng::Derive(seed, results.size()), tolerance));
  };

  check("matmul", [](Tape* t, const std::vector<Var>& in) { return ops::Matmul(t, in[0], in[1]); },
        {leaf(RandomTensor({3, 4}, rng)), leaf(RandomTensor({4, 2}, rng))});
  check("add_bias", [](Tape* t, const std::vector<Var>& in) { return ops::AddBias(t, in[0], in[1]); },
        {leaf(RandomTensor({3, 4}, rng)), leaf(RandomTensor({4}, rng))});
  check("add", [](Tape* t, const std::vector<Var>& in) { return ops::Add(t, in[0], in[1]); },
        {leaf(RandomTensor({2, 3}, rng)), leaf(RandomTensor({2, 3}, rng))});
  check("mul", [](Tape* t, const std::vector<Var>& in) { return ops::Mul(t, in[0], in[1]); },
        {leaf(RandomTensor({2, 3}, rng)), leaf(RandomTensor({2, 3}, rng))});
  check("relu", [](Tape* t, const std::vector<Var>& in) { return ops::Relu(t, in[0]); },
        {leaf(AwayFromZero({3, 5}, rng))});
  check("scale", [](Tape* t, const std::vector<Var>& in) { return ops::Scale(t, in[0], -1.75); },
        {leaf(RandomTensor({2, 4}, rng))});
  check("conv2d", [](Tape* t, const std::vector<Var>& in) { return ops::Conv2d(t, in[0], in[1], in[2], 1); },
        {leaf(RandomTensor({2, 2, 5, 5}, rng)), leaf(RandomTensor({3, 2, 3, 3}, rng)), leaf(RandomTensor({3}, rng))});
  check("conv2d_stride2",
        [](Tape* t, const std::vector<Var>& in) { return ops::Conv2d(t, in[0], in[1], in[2], 2); },
        {leaf(RandomTensor({1, 2, 7, 6}, rng)), leaf(RandomTensor({2, 2, 3, 2}, rng)), leaf(RandomTensor({2}, rng))});
  {
    // Distinct values spaced well beyond h so window maxima never swap.
    Tensor x({2, 2, 5, 4});
    std::vector<double> values(x.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = 0.01 * static_cast<double>(i);
    for (std::size_t i = values.size(); i > 1; --i) std::swap(values[i - 1], values[rng.Index(i)]);
    std::copy(values.begin(), values.end(), x.data().begin());
    check("maxpool2x2", [](Tape* t, const std::vector<Var>& in) { return ops::MaxPool2x2(t, in[0]); },
          {leaf(std::move(x))});
  }
  check("flatten", [](Tape* t, const std::vector<Var>& in) { return ops::Flatten(t, in[0]); },
        {leaf(RandomTensor({2, 3, 2, 2}, rng))});
  check("concat", [](Tape* t, const std::vector<Var>& in) { return ops::Concat(t, in); },
        {leaf(RandomTensor({3, 2}, rng)), leaf(RandomTensor({3, 4}, rng))});
  {
    std::vector<double> keep(12);
    for (double& k : keep) k = rng.Bernoulli(0.7) ? 1.0 : 0.0;
    check("dropout",
          [keep](Tape* t, const std::vector<Var>& in) { return ops::DropoutWithMask(t, in[0], keep, 0.3); },
          {leaf(RandomTensor({3, 4}, rng))});
  }
  {
    // Distinct advantages so the row maximum is stable under perturbation.
    Tensor adv = RandomTensor({4, 3}, rng);
    for (std::size_t r = 0; r < 4; ++r) adv.at(r, r % 3) += 2.0;
    check("dueling_combine",
          [](Tape* t, const std::vector<Var>& in) { return ops::DuelingCombine(t, in[0], in[1]); },
          {leaf(RandomTensor({4, 1}, rng)), leaf(std::move(adv))});
  }
  {
    Tensor target = RandomTensor({4, 3}, rng);
    Tensor mask({4, 3});
    for (std::size_t r = 0; r < 4; ++r) mask.at(r, rng.Index(3)) = 1.0;
    check("mse_loss",
          [target, mask](Tape* t, const std::vector<Var>& in) { return ops::MseLoss(t, in[0], target, &mask); },
          {leaf(RandomTensor({4, 3}, rng))});
  }

  agent::NetworkSpec tiny;
  tiny.input_shape = {2, 8, 8};
  tiny.n_actions = 3;
  tiny.conv = {{2, 4, 2}, {2, 2, 1}};
  tiny.hidden = {5};
  tiny.head = agent::HeadKind::kPlain;
  results.push_back(CheckNetwork("network_plain", tiny, Rng::Derive(seed, 100), tolerance, false));
  tiny.head = agent::HeadKind::kDueling;
  results.push_back(CheckNetwork("network_dueling", tiny, Rng::Derive(seed, 101), tolerance, false));
  tiny.plastic = true;
  results.push_back(CheckNetwork("network_dueling_plastic", tiny, Rng::Derive(seed, 102), tolerance, true));
  tiny.pool_after_conv = true;
  tiny.conv = {{2, 3, 1}};
  results.push_back(CheckNetwork("network_pooled", tiny, Rng::Derive(seed, 103), tolerance, false));
  return results;
}

}  // namespace hebbdqn
