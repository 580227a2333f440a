#include "stereostyle/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <vector>

namespace stereostyle {

namespace {

std::uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

float byteswap_float(float v) {
  std::uint32_t u;
  std::memcpy(&u, &v, sizeof u);
  u = ((u & 0xff) << 24) | ((u & 0xff00) << 8) | ((u >> 8) & 0xff00) | (u >> 24);
  std::memcpy(&v, &u, sizeof u);
  return v;
}

struct PfmHeader {
  int width = 0;
  int height = 0;
  bool little_endian = true;
  std::size_t data_offset = 0;
};

PfmHeader parse_pfm_header(const std::vector<char>& bytes, const std::string& name) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    std::string tok;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])))
      tok.push_back(bytes[pos++]);
    return tok;
  };

  const std::string magic = next_token();
  if (magic.empty()) throw ParseError("'" + name + "': empty PFM file");
  if (magic == "PF") throw FormatError("'" + name + "': 3-channel PFM, expected 1 channel");
  if (magic != "Pf") throw ParseError("'" + name + "': bad PFM magic '" + magic + "'");

  PfmHeader h;
  const std::string w = next_token();
  const std::string ht = next_token();
  const std::string scale = next_token();
  try {
    std::size_t used = 0;
    h.width = std::stoi(w, &used);
    if (used != w.size()) throw std::invalid_argument(w);
    h.height = std::stoi(ht, &used);
    if (used != ht.size()) throw std::invalid_argument(ht);
    const double s = std::stod(scale, &used);
    if (used != scale.size() || s == 0.0 || !std::isfinite(s)) throw std::invalid_argument(scale);
    h.little_endian = s < 0.0;
  } catch (const std::logic_error&) {
    throw ParseError("'" + name + "': malformed PFM header");
  }
  if (h.width < 1 || h.height < 1) throw ParseError("'" + name + "': bad PFM dimensions");
  // Exactly one whitespace byte separates the scale from the raster.
  if (pos >= bytes.size()) throw ParseError("'" + name + "': truncated PFM");
  h.data_offset = pos + 1;
  return h;
}

std::vector<float> read_pfm(const std::filesystem::path& path, int& height, int& width) {
  const auto bytes = read_all(path);
  const auto h = parse_pfm_header(bytes, path.string());
  const std::size_t n = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() < h.data_offset + n * sizeof(float))
    throw ParseError("'" + path.string() + "': truncated PFM raster");

  const bool swap = h.little_endian != (std::endian::native == std::endian::little);
  std::vector<float> top_down(n);
  for (int row = 0; row < h.height; ++row) {
    // PFM stores the bottom scanline first.
    const int y = h.height - 1 - row;
    for (int x = 0; x < h.width; ++x) {
      float v;
      std::memcpy(&v, bytes.data() + h.data_offset + (static_cast<std::size_t>(row) * h.width + x) * 4, 4);
      if (swap) v = byteswap_float(v);
      if (!std::isfinite(v)) throw FormatError("'" + path.string() + "': non-finite PFM sample");
      top_down[static_cast<std::size_t>(y) * h.width + x] = v;
    }
  }
  height = h.height;
  width = h.width;
  return top_down;
}

template <typename Grid>
void write_pfm(const Grid& g, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << "Pf\n" << g.width() << ' ' << g.height() << "\n-1.0\n";
  std::vector<float> row(g.width());
  for (int y = g.height() - 1; y >= 0; --y) {
    for (int x = 0; x < g.width(); ++x) {
      float v = static_cast<float>(g(y, x));
      if constexpr (std::endian::native == std::endian::big) v = byteswap_float(v);
      row[x] = v;
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

Tensor3 load_image(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!std::filesystem::exists(path)) throw IoError("cannot open '" + path.string() + "'");
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  if (img.format & PNG_FORMAT_FLAG_LINEAR) {
    png_image_free(&img);
    throw FormatError("'" + path.string() + "': only 8-bit PNG is supported");
  }
  if (img.format & PNG_FORMAT_FLAG_ALPHA) {
    png_image_free(&img);
    throw FormatError("'" + path.string() + "': images with alpha are not supported");
  }
  const bool color = (img.format & PNG_FORMAT_FLAG_COLOR) != 0;
  img.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const int channels = color ? 3 : 1;
  std::vector<png_byte> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    throw FormatError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  Tensor3 t(static_cast<int>(img.height), static_cast<int>(img.width), channels);
  auto dst = t.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = buf[i] / 255.0;
  return t;
}

void save_image(const Tensor3& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3)
    throw FormatError("save_image: expected 1 or 3 channels, got " +
                      std::to_string(image.channels()));
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buf(image.size());
  auto src = image.values();
  std::transform(src.begin(), src.end(), buf.begin(), quantize);
  if (!png_image_write_to_file(&img, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

DisparityMap load_float_map(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto v = read_pfm(path, h, w);
  DisparityMap d(h, w);
  std::copy(v.begin(), v.end(), d.values().begin());
  return d;
}

OcclusionMask load_mask(const std::filesystem::path& path) {
  int h = 0, w = 0;
  const auto v = read_pfm(path, h, w);
  OcclusionMask m(h, w);
  auto dst = m.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0f && v[i] != 1.0f)
      throw FormatError("'" + path.string() + "': mask values must be 0 or 1");
    dst[i] = v[i] != 0.0f ? 1 : 0;
  }
  return m;
}

void save_float_map(const DisparityMap& map, const std::filesystem::path& path) {
  write_pfm(map, path);
}
void save_float_map(const OcclusionMask& mask, const std::filesystem::path& path) {
  write_pfm(mask, path);
}
void save_float_map(const HoleMask& mask, const std::filesystem::path& path) {
  write_pfm(mask, path);
}

}  // namespace stereostyle
