#include "grounding_kit/image_ops.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "grounding_kit/atomic_file.hpp"

namespace gk {

Interpolation parse_interpolation(const std::string& name) {
  if (name == "bilinear") return Interpolation::kBilinear;
  if (name == "nearest") return Interpolation::kNearest;
  fail(ErrorCode::kSchemaError, "unknown interpolation '" + name + "'");
}

std::string interpolation_name(Interpolation interp) {
  return interp == Interpolation::kBilinear ? "bilinear" : "nearest";
}

Image resize_image(const Image& img, int height, int width, Interpolation interp) {
  if (height < 1 || width < 1) fail(ErrorCode::kInvalidArgument, "resize target must be positive");
  if (img.height() == height && img.width() == width) return img;

  std::vector<std::uint8_t> out(static_cast<std::size_t>(height) * width * 3);
  const double sy = static_cast<double>(img.height()) / height;
  const double sx = static_cast<double>(img.width()) / width;

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      std::uint8_t* px = &out[(static_cast<std::size_t>(y) * width + x) * 3];
      if (interp == Interpolation::kNearest) {
        const int iy = std::min(static_cast<int>((y + 0.5) * sy), img.height() - 1);
        const int ix = std::min(static_cast<int>((x + 0.5) * sx), img.width() - 1);
        for (int c = 0; c < 3; ++c) px[c] = img.at(iy, ix, c);
        continue;
      }
      // Half-pixel centers, edge-clamped.
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, img.height() - 1.0);
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, img.width() - 1.0);
      const int y0 = static_cast<int>(fy);
      const int x0 = static_cast<int>(fx);
      const int y1 = std::min(y0 + 1, img.height() - 1);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double wy = fy - y0;
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bottom = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        px[c] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bottom * wy));
      }
    }
  }
  return Image(height, width, std::move(out), img.id());
}

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

Image load_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIoError, "cannot open " + path.string());
  auto next_token = [&in]() {
    std::string tok;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    in >> tok;
    return tok;
  };
  const std::string magic = next_token();
  if (magic != "P6" && magic != "P3") {
    fail(ErrorCode::kSchemaError, path.string() + ": unsupported PPM variant '" + magic + "'");
  }
  int width = 0, height = 0, maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    fail(ErrorCode::kSchemaError, path.string() + ": malformed PPM header");
  }
  if (width < 1 || height < 1 || maxval != 255) {
    fail(ErrorCode::kSchemaError, path.string() + ": only 8-bit PPM images are supported");
  }
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * height * 3);
  if (magic == "P6") {
    in.get();  // single whitespace after maxval
    in.read(reinterpret_cast<char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
    if (in.gcount() != static_cast<std::streamsize>(rgb.size())) {
      fail(ErrorCode::kSchemaError, path.string() + ": truncated PPM data");
    }
  } else {
    for (auto& v : rgb) {
      int value = -1;
      if (!(in >> value) || value < 0 || value > 255) {
        fail(ErrorCode::kSchemaError, path.string() + ": bad ASCII PPM sample");
      }
      v = static_cast<std::uint8_t>(value);
    }
  }
  return Image(height, width, std::move(rgb), path.stem().string());
}

std::string encode_ppm(const Image& img) {
  std::ostringstream out;
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data().data()),
            static_cast<std::streamsize>(img.data().size()));
  return out.str();
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

Image load_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "rb"));
  if (!file) fail(ErrorCode::kIoError, "cannot open " + path.string());

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_stdio(&image, file.get())) {
    fail(ErrorCode::kSchemaError, path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::kSchemaError, path.string() + ": " + image.message);
  }
  return Image(static_cast<int>(image.height), static_cast<int>(image.width), std::move(rgb),
               path.stem().string());
}

std::string encode_png(const Image& img) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr)) {
    fail(ErrorCode::kIoError, std::string("png sizing failed: ") + image.message);
  }
  std::string buffer(size, '\0');
  if (!png_image_write_to_memory(&image, buffer.data(), &size, 0, img.data().data(), 0,
                                 nullptr)) {
    fail(ErrorCode::kIoError, std::string("png encoding failed: ") + image.message);
  }
  buffer.resize(size);
  return buffer;
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIoError, "no such image: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".ppm") return load_ppm(path);
  fail(ErrorCode::kSchemaError, path.string() + ": unsupported image format (use .png or .ppm)");
}

void save_image(const Image& img, const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_file_atomically(path, encode_png(img));
  } else if (ext == ".ppm") {
    write_file_atomically(path, encode_ppm(img));
  } else {
    fail(ErrorCode::kInvalidArgument, path.string() + ": output must be .png or .ppm");
  }
}

Image overlay_mask(const Image& img, const MaskProposal& mask, std::uint8_t r, std::uint8_t g,
                   std::uint8_t b, double opacity) {
  if (mask.height() != img.height() || mask.width() != img.width()) {
    fail(ErrorCode::kShapeMismatch, "overlay mask does not match the image");
  }
  Image out = img;
  const std::uint8_t tint[3] = {r, g, b};
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!mask.at(y, x)) continue;
      const bool edge = y == 0 || x == 0 || y == img.height() - 1 || x == img.width() - 1 ||
                        !mask.at(y - 1, x) || !mask.at(y + 1, x) || !mask.at(y, x - 1) ||
                        !mask.at(y, x + 1);
      for (int c = 0; c < 3; ++c) {
        const double blended =
            edge ? tint[c] : (1.0 - opacity) * img.at(y, x, c) + opacity * tint[c];
        out.at(y, x, c) = static_cast<std::uint8_t>(std::lround(blended));
      }
    }
  }
  return out;
}

}  // namespace gk
