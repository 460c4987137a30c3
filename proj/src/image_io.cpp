#include "stereo/image_io.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "stereo/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "raster writers assume a little-endian host");
static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

namespace stereo {

namespace {

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c) && c != '#') {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (c == '#' || (c != EOF && std::isspace(c))) in.unget();
  return tok;
}

int parse_positive_int(const std::string& tok, const char* what) {
  if (tok.empty()) throw FormatError(std::string("missing ") + what);
  for (char c : tok) {
    if (!std::isdigit(static_cast<unsigned char>(c))) {
      throw FormatError(std::string("malformed ") + what + ": '" + tok + "'");
    }
  }
  long v = 0;
  try {
    v = std::stol(tok);
  } catch (const std::exception&) {
    throw FormatError(std::string("malformed ") + what + ": '" + tok + "'");
  }
  if (v <= 0 || v > (1 << 24)) {
    throw FormatError(std::string("out-of-range ") + what + ": '" + tok + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

GrayImage load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  const std::string magic = next_token(in);
  if (magic != "P5") {
    throw FormatError("unsupported image format '" + magic + "' in " +
                      path.string() + " (expected binary PGM \"P5\")");
  }
  const int width = parse_positive_int(next_token(in), "width");
  const int height = parse_positive_int(next_token(in), "height");
  const std::string maxval_tok = next_token(in);
  if (maxval_tok != "255") {
    throw FormatError("unsupported maxval '" + maxval_tok + "' in " +
                      path.string() + " (only 255 is supported)");
  }
  // Exactly one whitespace byte separates the header from the payload.
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) {
    throw FormatError("missing header/payload separator in " + path.string());
  }

  GrayImage img(width, height);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(width));
  for (int y = 0; y < height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), width);
    if (in.gcount() != width) {
      throw FormatError("truncated PGM payload in " + path.string());
    }
    for (int x = 0; x < width; ++x) {
      img.at(x, y) = static_cast<float>(row[x]) / 255.0f;
    }
  }
  return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      float v = img.at(x, y);
      v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
      row[x] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    out.write(reinterpret_cast<const char*>(row.data()), img.width());
  }
  if (!out) throw IoError("write failed for " + path.string());
}

DisparityMap load_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  const std::string magic = next_token(in);
  if (magic == "PF") {
    throw FormatError("color PFM is not supported: " + path.string());
  }
  if (magic != "Pf") {
    throw FormatError("unsupported format '" + magic + "' in " +
                      path.string() + " (expected grayscale PFM \"Pf\")");
  }
  const int width = parse_positive_int(next_token(in), "width");
  const int height = parse_positive_int(next_token(in), "height");
  const std::string scale_tok = next_token(in);
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    throw FormatError("malformed scale '" + scale_tok + "' in " +
                      path.string());
  }
  if (!(scale < 0.0)) {
    throw FormatError("big-endian PFM (scale " + scale_tok +
                      ") is not supported: " + path.string());
  }
  const int sep = in.get();
  if (sep == EOF || !std::isspace(sep)) {
    throw FormatError("missing header/payload separator in " + path.string());
  }

  DisparityMap map(width, height);
  std::vector<float> row(static_cast<std::size_t>(width));
  // PFM stores rows bottom-up.
  for (int y = height - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(width) * 4);
    if (in.gcount() != static_cast<std::streamsize>(width) * 4) {
      throw FormatError("truncated PFM payload in " + path.string());
    }
    for (int x = 0; x < width; ++x) {
      const float v = row[x];
      if (std::isnan(v)) {
        throw DataError("NaN sample in " + path.string());
      }
      if (std::isinf(v)) {
        if (v > 0.0f) {
          throw DataError("+inf sample in " + path.string());
        }
        map.set_invalid(x, y);
      } else {
        map.set(x, y, v);
      }
    }
  }
  return map;
}

void save_pfm(const DisparityMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  out << "Pf\n" << map.width() << " " << map.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(map.width()));
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      row[x] = map.is_valid(x, y)
                   ? map.value(x, y)
                   : -std::numeric_limits<float>::infinity();
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(map.width()) * 4);
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace stereo
