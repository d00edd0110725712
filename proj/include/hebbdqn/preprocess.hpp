#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "hebbdqn/envs.hpp"
#include "hebbdqn/tensor.hpp"

namespace hebbdqn::preprocess {

inline constexpr std::size_t kOutputSize = 84;
inline constexpr std::size_t kCropSize = 160;
inline constexpr std::size_t kHistory = 4;

// ITU-R BT.601 luma weights.
inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

// 84x84 grayscale image with values in [0, 1].
class ProcessedFrame {
 public:
  ProcessedFrame() : pixels_(kOutputSize * kOutputSize, 0.0) {}
  explicit ProcessedFrame(std::vector<double> pixels);

  std::span<const double> pixels() const { return pixels_; }
  double at(std::size_t row, std::size_t col) const { return pixels_[row * kOutputSize + col]; }
  double Mean() const;

  bool operator==(const ProcessedFrame&) const = default;

 private:
  std::vector<double> pixels_;
};

// Grayscale / 255, crop (must be 160x160 inside the frame), then area-average
// 160 -> 84. Each output pixel integrates the input over a window of
// 160/84 input pixels with fractional edge weights, so the mean of the crop is
// preserved.
ProcessedFrame Preprocess(const envs::Frame& frame, const envs::CropRect& crop);

// Grayscale of one frame row without resizing; used by vector observations.
std::vector<double> GrayscaleRow(const envs::Frame& frame);

// Run-length packed vector of doubles: zero runs are stored as counts, other
// values verbatim. Unpacking is exact.
class PackedFrame {
 public:
  explicit PackedFrame(std::span<const double> values);

  std::size_t size() const { return size_; }
  void UnpackInto(std::span<double> out) const;
  std::vector<double> Unpack() const;
  std::size_t PackedBytes() const;

 private:
  std::size_t size_ = 0;
  // (zero run length, literal count) pairs; literals are consumed in order.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> runs_;
  std::vector<double> literals_;
};

using FrameRef = std::shared_ptr<const PackedFrame>;

// A state as references to its history frames, oldest first. Consecutive
// states share frame objects rather than copies.
struct StateRef {
  std::vector<FrameRef> frames;
  Shape shape;  // [C, H, W] of the materialised state

  std::size_t size() const { return ShapeProduct(shape); }
  void WriteTo(std::span<double> out) const;
  Tensor Materialize() const;  // shape [C, H, W]
};

// Ring of the kHistory most recent processed frames, oldest first.
class FrameStack {
 public:
  // Replicates the frame kHistory times.
  void Reset(const ProcessedFrame& frame);
  // Evicts the oldest frame.
  void Push(const ProcessedFrame& frame);

  bool initialized() const { return !frames_.empty(); }
  const ProcessedFrame& frame(std::size_t i) const { return frames_.at(i)->dense; }
  // State tensor [4, 84, 84], channel order oldest -> newest.
  Tensor AsState() const;
  StateRef AsStateRef() const;

 private:
  struct Entry {
    ProcessedFrame dense;
    FrameRef packed;
  };
  std::vector<std::shared_ptr<const Entry>> frames_;
};

// Turns environment frames into network states: pixel games go through
// Preprocess + FrameStack, vector games use the grayscale strip directly.
class Observer {
 public:
  explicit Observer(const envs::EnvSpec& spec);

  const Shape& state_shape() const { return shape_; }
  void Reset(const envs::Frame& frame);
  void Push(const envs::Frame& frame);
  StateRef Current() const;
  // The most recent processed frame (pixel observers only).
  const ProcessedFrame& LatestProcessed() const;

 private:
  envs::ObservationKind kind_;
  envs::CropRect crop_;
  Shape shape_;
  FrameStack stack_;
  FrameRef vector_;
};

}  // namespace hebbdqn::preprocess
