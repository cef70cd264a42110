#include "psnis/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "psnis/errors.hpp"

namespace psnis {

namespace {

namespace fs = std::filesystem;

using FilePtr = std::unique_ptr<std::FILE, decltype(&std::fclose)>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr fp(std::fopen(path.c_str(), mode), &std::fclose);
  if (!fp) throw DataError("cannot open " + path.string());
  return fp;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  if (auto* err = static_cast<std::string*>(png_get_error_ptr(png))) *err = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct RawPng {
  std::vector<unsigned char> bytes;
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int bit_depth = 8;
};

// Only objects constructed before setjmp live in this frame, so the longjmp
// taken on a libpng error skips no destructors.
bool read_png_raw(std::FILE* fp, RawPng& out, std::string& err) {
  std::vector<png_bytep> rows;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err,
                                           png_error_fn, png_warning_fn);
  if (!png) {
    err = "png_create_read_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    err = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_PALETTE || (color & PNG_COLOR_MASK_COLOR)) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  if (png_get_channels(png, info) != 1) {
    png_error(png, "unsupported channel layout");
  }
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  const png_size_t row_bytes = png_get_rowbytes(png, info);
  out.bytes.resize(row_bytes * out.height);
  rows.resize(out.height);
  for (png_uint_32 r = 0; r < out.height; ++r) rows[r] = out.bytes.data() + r * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool write_png_raw(std::FILE* fp, const std::vector<unsigned char>& bytes,
                   png_uint_32 width, png_uint_32 height, int bit_depth,
                   std::string& err) {
  std::vector<png_bytep> rows;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err,
                                            png_error_fn, png_warning_fn);
  if (!png) {
    err = "png_create_write_struct failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    err = "png_create_info_struct failed";
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * (bit_depth / 8);
  rows.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) {
    rows[r] = const_cast<png_bytep>(bytes.data() + r * row_bytes);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

ImageGrid read_png(const fs::path& path) {
  auto fp = open_file(path, "rb");
  RawPng raw;
  std::string err;
  if (!read_png_raw(fp.get(), raw, err)) {
    throw DataError("cannot decode PNG " + path.string() + ": " + err);
  }
  const std::size_t n = static_cast<std::size_t>(raw.width) * raw.height;
  std::vector<double> px(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = static_cast<double>((raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) px[i] = raw.bytes[i];
  }
  return ImageGrid(static_cast<int>(raw.width), static_cast<int>(raw.height),
                   std::move(px));
}

void write_png(const fs::path& path, const ImageGrid& img, int bit_depth) {
  std::vector<unsigned char> bytes;
  bytes.reserve(img.size() * (bit_depth / 8));
  for (double v : img.pixels()) {
    const auto u = static_cast<unsigned>(v);
    if (bit_depth == 16) bytes.push_back(static_cast<unsigned char>(u >> 8));
    bytes.push_back(static_cast<unsigned char>(u & 0xff));
  }
  auto fp = open_file(path, "wb");
  std::string err;
  if (!write_png_raw(fp.get(), bytes, static_cast<png_uint_32>(img.width()),
                     static_cast<png_uint_32>(img.height()), bit_depth, err)) {
    throw DataError("cannot write PNG " + path.string() + ": " + err);
  }
}

// Next whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  char ch;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string ignored;
      std::getline(in, ignored);
      if (!tok.empty()) return tok;
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!tok.empty()) return tok;
    } else {
      tok.push_back(ch);
    }
  }
  return tok;
}

int parse_header_int(std::istream& in, const fs::path& path) {
  const std::string tok = pgm_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("malformed header in " + path.string());
  }
}

ImageGrid read_pgm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  const std::string magic = pgm_token(in);
  const int width = parse_header_int(in, path);
  const int height = parse_header_int(in, path);
  const int maxval = parse_header_int(in, path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 65535) {
    throw DataError("bad PGM header in " + path.string());
  }
  const std::size_t n = static_cast<std::size_t>(width) * height;
  std::vector<double> px(n);
  if (magic == "P2") {
    for (auto& v : px) {
      long long value = 0;
      if (!(in >> value) || value < 0 || value > maxval) {
        throw DataError("bad P2 pixel data in " + path.string());
      }
      v = static_cast<double>(value);
    }
  } else if (magic == "P5") {
    // pgm_token consumed the single whitespace byte after maxval.
    const std::size_t bpp = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> bytes(n * bpp);
    in.read(reinterpret_cast<char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
      throw DataError("truncated P5 data in " + path.string());
    }
    for (std::size_t i = 0; i < n; ++i) {
      px[i] = bpp == 2 ? static_cast<double>((bytes[2 * i] << 8) | bytes[2 * i + 1])
                       : static_cast<double>(bytes[i]);
    }
  } else {
    throw DataError("unsupported PGM variant in " + path.string());
  }
  return ImageGrid(width, height, std::move(px));
}

void write_pgm(const fs::path& path, const ImageGrid& img, int maxval) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width() << ' ' << img.height() << '\n' << maxval << '\n';
  for (double v : img.pixels()) {
    const auto u = static_cast<unsigned>(v);
    if (maxval > 255) out.put(static_cast<char>(u >> 8));
    out.put(static_cast<char>(u & 0xff));
  }
  if (!out) throw DataError("write failed for " + path.string());
}

ImageGrid read_text_grid(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  long long width = 0, height = 0;
  if (!(in >> width >> height) || width <= 0 || height <= 0) {
    throw DataError("bad text grid header in " + path.string());
  }
  std::vector<double> px(static_cast<std::size_t>(width * height));
  for (auto& v : px) {
    if (!(in >> v) || !std::isfinite(v) || v < 0.0) {
      throw DataError("bad text grid data in " + path.string());
    }
  }
  return ImageGrid(static_cast<int>(width), static_cast<int>(height), std::move(px));
}

void write_text_grid(const fs::path& path, const ImageGrid& img) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << img.width() << ' ' << img.height() << '\n';
  out.precision(17);
  for (int r = 0; r < img.height(); ++r) {
    for (int c = 0; c < img.width(); ++c) {
      if (c) out << ' ';
      out << img.at(r, c);
    }
    out << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  for (char& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return ext;
}

}  // namespace

ImageGrid read_image(const fs::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw DataError("cannot open " + path.string());
  unsigned char head[8] = {};
  probe.read(reinterpret_cast<char*>(head), 8);
  const auto got = probe.gcount();
  probe.close();
  try {
    if (got == 8 && png_sig_cmp(head, 0, 8) == 0) return read_png(path);
    if (got >= 2 && head[0] == 'P' && (head[1] == '2' || head[1] == '5')) {
      return read_pgm(path);
    }
    return read_text_grid(path);
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ImageGrid quantize_8bit(const ImageGrid& img) {
  std::vector<double> px(img.pixels().begin(), img.pixels().end());
  for (double& v : px) v = std::clamp(std::floor(v + 0.5), 0.0, 255.0);
  return ImageGrid(img.width(), img.height(), std::move(px));
}

void write_image_8bit(const fs::path& path, const ImageGrid& img) {
  const ImageGrid q = quantize_8bit(img);
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_png(path, q, 8);
  } else if (ext == ".pgm") {
    write_pgm(path, q, 255);
  } else if (ext == ".txt") {
    write_text_grid(path, q);
  } else {
    throw InvalidArgument("unsupported output extension '" + ext +
                          "' (use .png, .pgm or .txt)");
  }
}

void write_counts(const fs::path& path, const ImageGrid& counts) {
  double mx = 0.0;
  for (double v : counts.pixels()) {
    if (v != std::floor(v)) throw InvalidArgument("write_counts: non-integer pixel");
    mx = std::max(mx, v);
  }
  const std::string ext = lower_extension(path);
  if (ext == ".txt") {
    write_text_grid(path, counts);
    return;
  }
  if (mx > 65535.0) {
    throw InvalidArgument("write_counts: count above 65535; use a .txt output");
  }
  if (ext == ".png") {
    write_png(path, counts, 16);
  } else if (ext == ".pgm") {
    write_pgm(path, counts, 65535);
  } else {
    throw InvalidArgument("unsupported output extension '" + ext +
                          "' (use .png, .pgm or .txt)");
  }
}

}  // namespace psnis
