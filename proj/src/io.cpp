#include "lf/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "lf/error.hpp"

namespace lf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void read_png_rows(const fs::path& path, int* width, int* height,
                   int* bit_depth, std::vector<std::vector<uint8_t>>* rows,
                   bool want_gray16) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw LfError(ErrorCode::kIo, "png-read", "cannot open " + path.string());

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    throw LfError(ErrorCode::kIo, "png-read", "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw LfError(ErrorCode::kFormat, "png-read",
                  "corrupt or unsupported PNG: " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  *width = static_cast<int>(png_get_image_width(png, info));
  *height = static_cast<int>(png_get_image_height(png, info));
  int depth = png_get_bit_depth(png, info);
  int color = png_get_color_type(png, info);

  if (want_gray16) {
    if (depth != 16 || color != PNG_COLOR_TYPE_GRAY) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw LfError(ErrorCode::kFormat, "png-read",
                    "expected 16-bit grayscale: " + path.string());
    }
    *bit_depth = 16;
  } else {
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
    *bit_depth = 8;
  }
  png_read_update_info(png, info);

  size_t row_bytes = png_get_rowbytes(png, info);
  rows->assign(*height, std::vector<uint8_t>(row_bytes));
  std::vector<png_bytep> row_ptrs(*height);
  for (int y = 0; y < *height; ++y) row_ptrs[y] = (*rows)[y].data();
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

void write_png_rows(const fs::path& path, int width, int height, int bit_depth,
                    int color_type, const std::vector<std::vector<uint8_t>>& rows) {
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw LfError(ErrorCode::kIo, "png-write", "cannot write " + path.string());

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    throw LfError(ErrorCode::kIo, "png-write", "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw LfError(ErrorCode::kIo, "png-write", "write failed: " + path.string());
  }
  png_init_io(png, fp.get());
  // Fixed settings so identical pixels always produce identical bytes.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_SUB);
  png_set_IHDR(png, info, width, height, bit_depth, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(rows[y].data());
  }
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

uint8_t to_byte(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(c * 255.0f));
}

}  // namespace

Image read_png(const fs::path& path) {
  int w = 0, h = 0, depth = 0;
  std::vector<std::vector<uint8_t>> rows;
  read_png_rows(path, &w, &h, &depth, &rows, false);
  Image img(w, h, 3);
  constexpr float kInv = 1.0f / 255.0f;
  for (int y = 0; y < h; ++y) {
    const uint8_t* r = rows[y].data();
    for (int x = 0; x < w; ++x) {
      img.at(y, x, 0) = r[3 * x + 0] * kInv;
      img.at(y, x, 1) = r[3 * x + 1] * kInv;
      img.at(y, x, 2) = r[3 * x + 2] * kInv;
    }
  }
  return img;
}

void write_png(const fs::path& path, const Image& img) {
  int w = img.width(), h = img.height(), c = img.channels();
  if (c != 1 && c != 3) {
    throw LfError(ErrorCode::kInvalidParam, "png-write",
                  "image must have 1 or 3 channels");
  }
  std::vector<std::vector<uint8_t>> rows(h, std::vector<uint8_t>(static_cast<size_t>(w) * c));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        rows[y][static_cast<size_t>(x) * c + ch] = to_byte(img.at(y, x, ch));
      }
    }
  }
  write_png_rows(path, w, h, 8,
                 c == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, rows);
}

void write_png_gray16(const fs::path& path, const std::vector<uint16_t>& values,
                      int width, int height) {
  if (values.size() != static_cast<size_t>(width) * height) {
    throw LfError(ErrorCode::kInvalidParam, "png-write", "sample count mismatch");
  }
  std::vector<std::vector<uint8_t>> rows(height,
                                         std::vector<uint8_t>(static_cast<size_t>(width) * 2));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      uint16_t v = values[static_cast<size_t>(y) * width + x];
      rows[y][2 * x] = static_cast<uint8_t>(v >> 8);  // network byte order
      rows[y][2 * x + 1] = static_cast<uint8_t>(v & 0xff);
    }
  }
  write_png_rows(path, width, height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

std::vector<uint16_t> read_png_gray16(const fs::path& path, int* width,
                                      int* height) {
  int depth = 0;
  std::vector<std::vector<uint8_t>> rows;
  read_png_rows(path, width, height, &depth, &rows, true);
  std::vector<uint16_t> out(static_cast<size_t>(*width) * *height);
  for (int y = 0; y < *height; ++y) {
    for (int x = 0; x < *width; ++x) {
      out[static_cast<size_t>(y) * *width + x] =
          static_cast<uint16_t>((rows[y][2 * x] << 8) | rows[y][2 * x + 1]);
    }
  }
  return out;
}

std::string view_file_name(int s, int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%02d_%02d.png", s, t);
  return buf;
}

LightField load_light_field(const fs::path& dir) {
  fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) {
    throw LfError(ErrorCode::kFormat, "lf-load",
                  "missing manifest: " + manifest_path.string());
  }
  json m;
  try {
    in >> m;
  } catch (const json::exception& e) {
    throw LfError(ErrorCode::kFormat, "lf-load",
                  "bad manifest: " + std::string(e.what()));
  }

  int rows, cols, width, height;
  Intrinsics intr;
  double spacing;
  try {
    rows = m.at("rows").get<int>();
    cols = m.at("cols").get<int>();
    width = m.at("width").get<int>();
    height = m.at("height").get<int>();
    intr.focal_length_px = m.at("focal_length_px").get<double>();
    intr.principal_point =
        Eigen::Vector2d(m.at("principal_point").at(0).get<double>(),
                        m.at("principal_point").at(1).get<double>());
    spacing = m.value("angular_spacing", 1.0);
  } catch (const json::exception& e) {
    throw LfError(ErrorCode::kFormat, "lf-load",
                  "manifest field error: " + std::string(e.what()));
  }
  if (rows < 1 || cols < 1 || width < 1 || height < 1) {
    throw LfError(ErrorCode::kFormat, "lf-load", "non-positive manifest dims");
  }

  // cols = horizontal extent S, rows = vertical extent T.
  LightField lf(cols, rows, intr, spacing);
  for (int s = 0; s < lf.s_size(); ++s) {
    for (int t = 0; t < lf.t_size(); ++t) {
      fs::path view_path = dir / view_file_name(s, t);
      if (!fs::exists(view_path)) {
        throw LfError(ErrorCode::kMissingView, "lf-load",
                      "declared view (" + std::to_string(s) + "," +
                          std::to_string(t) + ") absent: " + view_path.string());
      }
      Image img = read_png(view_path);
      if (img.width() != width || img.height() != height) {
        throw LfError(ErrorCode::kInconsistent, "lf-load",
                      "view (" + std::to_string(s) + "," + std::to_string(t) +
                          ") is " + std::to_string(img.width()) + "x" +
                          std::to_string(img.height()) + ", manifest says " +
                          std::to_string(width) + "x" + std::to_string(height));
      }
      lf.view(s, t) = std::move(img);
    }
  }
  lf.validate("lf-load");
  return lf;
}

void save_light_field(const LightField& lf, const fs::path& dir) {
  lf.validate("lf-save");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw LfError(ErrorCode::kIo, "lf-save",
                  "cannot create " + dir.string() + ": " + ec.message());
  }
  json m;
  m["rows"] = lf.t_size();
  m["cols"] = lf.s_size();
  m["width"] = lf.width();
  m["height"] = lf.height();
  m["focal_length_px"] = lf.intrinsics().focal_length_px;
  m["principal_point"] = {lf.intrinsics().principal_point.x(),
                          lf.intrinsics().principal_point.y()};
  m["angular_spacing"] = lf.angular_spacing();

  std::ofstream out(dir / "manifest.json");
  if (!out) {
    throw LfError(ErrorCode::kIo, "lf-save",
                  "cannot write manifest in " + dir.string());
  }
  out << m.dump(2) << "\n";
  out.close();

  for (int s = 0; s < lf.s_size(); ++s) {
    for (int t = 0; t < lf.t_size(); ++t) {
      write_png(dir / view_file_name(s, t), lf.view(s, t));
    }
  }
}

}  // namespace lf
