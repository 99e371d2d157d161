#include "vgr/priors.hpp"

#include <png.h>

#include <cmath>

namespace vgr {

namespace fs = std::filesystem;

ImagePlanef read_png(const fs::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw FormatError(path.string() + ": " + image.message);
  }
  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = colour ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path.string() + ": " + msg);
  }
  ImagePlanef plane(int(image.width), int(image.height), channels);
  for (Index p = 0; p < plane.pixel_count(); ++p) {
    for (int c = 0; c < channels; ++c) {
      plane.values(p, c) = float(buffer[std::size_t(p * channels + c)]) / 255.0f;
    }
  }
  return plane;
}

void write_png(const fs::path& path, const ImagePlanef& plane) {
  const int channels = plane.channels();
  if (channels != 1 && channels != 3) throw ContractError("write_png: 1- or 3-channel planes only");
  std::vector<png_byte> buffer(std::size_t(plane.pixel_count() * channels));
  for (Index p = 0; p < plane.pixel_count(); ++p) {
    for (int c = 0; c < channels; ++c) {
      const float v = std::clamp(plane.values(p, c), 0.0f, 1.0f);
      buffer[std::size_t(p * channels + c)] = png_byte(std::lround(v * 255.0f));
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = png_uint_32(plane.width);
  image.height = png_uint_32(plane.height);
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  if (!png_image_write_to_file(&image, tmp.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + image.message);
  }
  fs::rename(tmp, path);
}

}  // namespace vgr
