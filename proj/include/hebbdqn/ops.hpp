#pragma once

#include <cstddef>
#include <vector>

#include "hebbdqn/rng.hpp"
#include "hebbdqn/tensor.hpp"

// Differentiable operations. Each takes an optional tape: with a null tape, or
// when no input requires a gradient, nothing is recorded and the result is a
// plain value. Shape errors throw Error(kShape) naming both shapes.
namespace hebbdqn::ops {

// [N, K] x [K, M] -> [N, M]
Var Matmul(Tape* tape, const Var& a, const Var& b);

// [N, M] + [M] broadcast over rows.
Var AddBias(Tape* tape, const Var& x, const Var& bias);

// Elementwise, identical shapes.
Var Add(Tape* tape, const Var& a, const Var& b);
Var Mul(Tape* tape, const Var& a, const Var& b);

Var Relu(Tape* tape, const Var& x);

// Multiplies by a constant.
Var Scale(Tape* tape, const Var& x, double factor);

// input [N, C, H, W], kernel [F, C, KH, KW], optional bias [F]; valid padding.
// Output [N, F, (H-KH)/stride+1, (W-KW)/stride+1].
Var Conv2d(Tape* tape, const Var& input, const Var& kernel, const Var& bias,
           std::size_t stride);

// 2x2 window, stride 2, trailing odd row/column dropped. Ties route the
// gradient to the first maximum in row-major window order.
Var MaxPool2x2(Tape* tape, const Var& x);

// [N, ...] -> [N, prod(...)]
Var Flatten(Tape* tape, const Var& x);

// Rank-2 tensors with equal row counts, joined along columns.
Var Concat(Tape* tape, const std::vector<Var>& parts);

// Inverted dropout with an explicit keep mask of 0/1 entries; kept entries are
// scaled by 1/(1-rate).
Var DropoutWithMask(Tape* tape, const Var& x, const std::vector<double>& keep,
                    double rate);

// Draws the mask from `rng`; identity when rate == 0 or not training.
Var Dropout(Tape* tape, const Var& x, double rate, bool training, Rng& rng);

// value [N, 1], advantage [N, A] -> Q [N, A] with
// Q(s,a) = V(s) + A(s,a) - max_a' A(s,a'). Lowest index wins ties.
Var DuelingCombine(Tape* tape, const Var& value, const Var& advantage);

// (1/N) sum(mask * (pred - target)^2), N = pred.dim(0). `mask` may be null.
// Only `pred` receives a gradient: targets are constants.
Var MseLoss(Tape* tape, const Var& pred, const Tensor& target,
            const Tensor* mask = nullptr);

}  // namespace hebbdqn::ops
