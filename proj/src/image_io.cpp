#include "trdpd/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#ifdef TRDPD_HAVE_PNG
#include <png.h>
#endif

namespace trdpd {
namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw std::runtime_error(path.string() + ": " + what);
}

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

int parse_int(const std::filesystem::path& path, const std::string& token) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) fail(path, "malformed header field '" + token + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(path, "malformed header field '" + token + "'");
  }
}

}  // namespace

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") fail(path, "not a PGM file");
  const int width = parse_int(path, next_token(in));
  const int height = parse_int(path, next_token(in));
  const int maxval = parse_int(path, next_token(in));
  if (width <= 0 || height <= 0) fail(path, "invalid dimensions");
  if (maxval <= 0 || maxval > 255) fail(path, "only 8-bit PGM is supported");

  Image img(width, height);
  if (magic == "P5") {
    std::vector<unsigned char> buf(img.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < buf.size(); ++i) img[i] = buf[i];
  } else {
    for (std::size_t i = 0; i < img.size(); ++i) {
      const std::string tok = next_token(in);
      if (tok.empty()) fail(path, "truncated pixel data");
      img[i] = parse_int(path, tok);
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const Image& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<unsigned char> buf(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    const double v = std::clamp(image[i], 0.0, 255.0);
    buf[i] = static_cast<unsigned char>(std::floor(v + 0.5));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) fail(path, "write failed");
}

bool png_supported() {
#ifdef TRDPD_HAVE_PNG
  return true;
#else
  return false;
#endif
}

Image read_png(const std::filesystem::path& path) {
#ifdef TRDPD_HAVE_PNG
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) fail(path, png.message);
  png.format = PNG_FORMAT_GRAY;
  Image img(static_cast<int>(png.width), static_cast<int>(png.height));
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) fail(path, png.message);
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = buf[i];
  return img;
#else
  fail(path, "PNG support not compiled in");
#endif
}

Image read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".png") return read_png(path);
  return read_pgm(path);
}

}  // namespace trdpd
