#include "hebbdqn/png_dump.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "hebbdqn/error.hpp"

namespace hebbdqn {

namespace {

void Write(const std::string& path, std::size_t width, std::size_t height, png_uint_32 format,
           const std::uint8_t* pixels) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  if (png_image_write_to_file(&image, path.c_str(), 0, pixels, 0, nullptr) == 0) {
    const std::string reason = image.message;
    png_image_free(&image);
    Fail(ErrorKind::kIo, "cannot write PNG '" + path + "': " + reason);
  }
}

}  // namespace

void WriteFramePng(const std::string& path, const envs::Frame& frame) {
  if (frame.data.size() != frame.width * frame.height * 3) {
    Fail(ErrorKind::kValidation, "frame buffer size does not match its dimensions");
  }
  Write(path, frame.width, frame.height, PNG_FORMAT_RGB, frame.data.data());
}

void WriteProcessedPng(const std::string& path, const preprocess::ProcessedFrame& frame) {
  std::vector<std::uint8_t> gray;
  gray.reserve(frame.pixels().size());
  for (double v : frame.pixels()) gray.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  Write(path, preprocess::kOutputSize, preprocess::kOutputSize, PNG_FORMAT_GRAY, gray.data());
}

}  // namespace hebbdqn
