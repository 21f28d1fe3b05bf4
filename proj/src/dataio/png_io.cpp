#include <png.h>

#include <vector>

#include "vtf/dataio.hpp"
#include "vtf/errors.hpp"

namespace vtf::dataio {

core::ImageTensor read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw DataError("cannot decode " + path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string message = image.message;
    png_image_free(&image);
    throw DataError("cannot decode " + path.string() + ": " + message);
  }
  const auto h = static_cast<int64_t>(image.height);
  const auto w = static_cast<int64_t>(image.width);
  torch::Tensor hwc = torch::from_blob(buffer.data(), {h, w, 3}, torch::kUInt8).clone();
  return {hwc.permute({2, 0, 1}).to(torch::kFloat32).contiguous(), core::PixelRange::kByte};
}

void write_png(const core::ImageTensor& image, const std::filesystem::path& path) {
  const int64_t c = image.channels();
  if (c != 1 && c != 3) throw ShapeError("write_png supports 1 or 3 channels");
  torch::Tensor hwc = core::to_bytes(image).permute({1, 2, 0}).contiguous();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.width());
  out.height = static_cast<png_uint_32>(image.height());
  out.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.c_str(), 0, hwc.data_ptr<uint8_t>(), 0, nullptr)) {
    throw DataError("cannot write " + path.string() + ": " + out.message);
  }
}

}  // namespace vtf::dataio
