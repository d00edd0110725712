#pragma once

#include <string>

#include "hebbdqn/envs.hpp"
#include "hebbdqn/preprocess.hpp"

namespace hebbdqn {

// 8-bit RGB PNG of a raw frame.
void WriteFramePng(const std::string& path, const envs::Frame& frame);

// 8-bit grayscale PNG of a processed frame; values are scaled by 255 and
// rounded.
void WriteProcessedPng(const std::string& path, const preprocess::ProcessedFrame& frame);

}  // namespace hebbdqn
