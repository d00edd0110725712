#include "hebbdqn/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hebbdqn/error.hpp"

namespace hebbdqn::preprocess {

namespace {

struct Tap {
  std::size_t index;
  double weight;
};

// Area-averaging taps: output pixel i covers input span
// [i * 160/84, (i+1) * 160/84). Endpoints are scaled by 84 so overlaps are
// integers.
const std::array<std::vector<Tap>, kOutputSize>& DownscaleTaps() {
  static const auto taps = [] {
    std::array<std::vector<Tap>, kOutputSize> result;
    constexpr std::size_t in = kCropSize;
    constexpr std::size_t out = kOutputSize;
    for (std::size_t i = 0; i < out; ++i) {
      const std::size_t lo = i * in;
      const std::size_t hi = (i + 1) * in;
      for (std::size_t k = lo / out; k * out < hi && k < in; ++k) {
        const std::size_t start = std::max(lo, k * out);
        const std::size_t stop = std::min(hi, (k + 1) * out);
        if (stop > start) {
          result[i].push_back({k, static_cast<double>(stop - start) / static_cast<double>(in)});
        }
      }
    }
    return result;
  }();
  return taps;
}

double Luma(const std::uint8_t* rgb) {
  return (kLumaR * rgb[0] + kLumaG * rgb[1] + kLumaB * rgb[2]) / 255.0;
}

}  // namespace

ProcessedFrame::ProcessedFrame(std::vector<double> pixels) : pixels_(std::move(pixels)) {
  if (pixels_.size() != kOutputSize * kOutputSize) {
    Fail(ErrorKind::kShape, "processed frame must hold 84x84 values");
  }
}

double ProcessedFrame::Mean() const {
  return std::accumulate(pixels_.begin(), pixels_.end(), 0.0) /
         static_cast<double>(pixels_.size());
}

ProcessedFrame Preprocess(const envs::Frame& frame, const envs::CropRect& crop) {
  if (crop.width != kCropSize || crop.height != kCropSize) {
    Fail(ErrorKind::kValidation, "crop must be 160x160");
  }
  if (crop.x + crop.width > frame.width || crop.y + crop.height > frame.height) {
    Fail(ErrorKind::kValidation, "crop rectangle lies outside the " +
                                     std::to_string(frame.width) + "x" +
                                     std::to_string(frame.height) + " frame");
  }
  if (frame.data.size() != frame.width * frame.height * 3) {
    Fail(ErrorKind::kValidation, "frame buffer size does not match its dimensions");
  }
  const auto& taps = DownscaleTaps();
  // Horizontal pass over each cropped row, then vertical pass.
  std::vector<double> rows(kCropSize * kOutputSize, 0.0);
  std::vector<double> gray(kCropSize);
  for (std::size_t y = 0; y < kCropSize; ++y) {
    const std::uint8_t* src = &frame.data[((crop.y + y) * frame.width + crop.x) * 3];
    for (std::size_t x = 0; x < kCropSize; ++x) gray[x] = Luma(src + 3 * x);
    for (std::size_t j = 0; j < kOutputSize; ++j) {
      double acc = 0.0;
      for (const Tap& t : taps[j]) acc += t.weight * gray[t.index];
      rows[y * kOutputSize + j] = acc;
    }
  }
  std::vector<double> out(kOutputSize * kOutputSize, 0.0);
  for (std::size_t i = 0; i < kOutputSize; ++i) {
    for (std::size_t j = 0; j < kOutputSize; ++j) {
      double acc = 0.0;
      for (const Tap& t : taps[i]) acc += t.weight * rows[t.index * kOutputSize + j];
      out[i * kOutputSize + j] = std::clamp(acc, 0.0, 1.0);
    }
  }
  return ProcessedFrame(std::move(out));
}

std::vector<double> GrayscaleRow(const envs::Frame& frame) {
  if (frame.height != 1) Fail(ErrorKind::kValidation, "vector observation frames must be one pixel high");
  std::vector<double> out(frame.width);
  for (std::size_t x = 0; x < frame.width; ++x) out[x] = Luma(&frame.data[3 * x]);
  return out;
}

PackedFrame::PackedFrame(std::span<const double> values) : size_(values.size()) {
  std::size_t i = 0;
  while (i < values.size()) {
    std::uint32_t zeros = 0;
    while (i < values.size() && values[i] == 0.0 && !std::signbit(values[i])) {
      ++zeros;
      ++i;
    }
    std::uint32_t literal = 0;
    while (i < values.size() && !(values[i] == 0.0 && !std::signbit(values[i]))) {
      literals_.push_back(values[i]);
      ++literal;
      ++i;
    }
    runs_.emplace_back(zeros, literal);
  }
}

void PackedFrame::UnpackInto(std::span<double> out) const {
  if (out.size() != size_) Fail(ErrorKind::kShape, "packed frame size mismatch");
  std::size_t pos = 0;
  std::size_t lit = 0;
  for (const auto& [zeros, literal] : runs_) {
    std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(pos), zeros, 0.0);
    pos += zeros;
    std::copy_n(literals_.begin() + static_cast<std::ptrdiff_t>(lit), literal,
                out.begin() + static_cast<std::ptrdiff_t>(pos));
    pos += literal;
    lit += literal;
  }
}

std::vector<double> PackedFrame::Unpack() const {
  std::vector<double> out(size_);
  UnpackInto(out);
  return out;
}

std::size_t PackedFrame::PackedBytes() const {
  return sizeof(*this) + runs_.capacity() * sizeof(runs_[0]) +
         literals_.capacity() * sizeof(double);
}

void StateRef::WriteTo(std::span<double> out) const {
  if (out.size() != size()) Fail(ErrorKind::kShape, "state buffer size mismatch");
  std::size_t offset = 0;
  for (const FrameRef& f : frames) {
    f->UnpackInto(out.subspan(offset, f->size()));
    offset += f->size();
  }
}

Tensor StateRef::Materialize() const {
  Tensor out(shape);
  WriteTo(out.data());
  return out;
}

void FrameStack::Reset(const ProcessedFrame& frame) {
  auto entry = std::make_shared<const Entry>(Entry{frame, std::make_shared<const PackedFrame>(frame.pixels())});
  frames_.assign(kHistory, entry);
}

void FrameStack::Push(const ProcessedFrame& frame) {
  if (!initialized()) Fail(ErrorKind::kState, "frame stack used before reset");
  auto entry = std::make_shared<const Entry>(Entry{frame, std::make_shared<const PackedFrame>(frame.pixels())});
  frames_.erase(frames_.begin());
  frames_.push_back(std::move(entry));
}

Tensor FrameStack::AsState() const {
  if (!initialized()) Fail(ErrorKind::kState, "frame stack used before reset");
  constexpr std::size_t plane = kOutputSize * kOutputSize;
  Tensor out({kHistory, kOutputSize, kOutputSize});
  for (std::size_t c = 0; c < kHistory; ++c) {
    const auto px = frames_[c]->dense.pixels();
    std::copy(px.begin(), px.end(), out.data().begin() + static_cast<std::ptrdiff_t>(c * plane));
  }
  return out;
}

StateRef FrameStack::AsStateRef() const {
  if (!initialized()) Fail(ErrorKind::kState, "frame stack used before reset");
  StateRef ref;
  ref.shape = {kHistory, kOutputSize, kOutputSize};
  for (const auto& e : frames_) ref.frames.push_back(e->packed);
  return ref;
}

Observer::Observer(const envs::EnvSpec& spec) : kind_(spec.observation), crop_(spec.crop) {
  if (kind_ == envs::ObservationKind::kPixels) {
    shape_ = {kHistory, kOutputSize, kOutputSize};
  } else {
    shape_ = {1, 1, spec.crop.width};
  }
}

void Observer::Reset(const envs::Frame& frame) {
  if (kind_ == envs::ObservationKind::kPixels) {
    stack_.Reset(Preprocess(frame, crop_));
  } else {
    vector_ = std::make_shared<const PackedFrame>(GrayscaleRow(frame));
  }
}

void Observer::Push(const envs::Frame& frame) {
  if (kind_ == envs::ObservationKind::kPixels) {
    stack_.Push(Preprocess(frame, crop_));
  } else {
    vector_ = std::make_shared<const PackedFrame>(GrayscaleRow(frame));
  }
}

StateRef Observer::Current() const {
  if (kind_ == envs::ObservationKind::kPixels) return stack_.AsStateRef();
  if (!vector_) Fail(ErrorKind::kState, "observer used before reset");
  return StateRef{{vector_}, shape_};
}

const ProcessedFrame& Observer::LatestProcessed() const {
  if (kind_ != envs::ObservationKind::kPixels) {
    Fail(ErrorKind::kState, "vector observers have no processed frames");
  }
  return stack_.frame(kHistory - 1);
}

}  // namespace hebbdqn::preprocess
