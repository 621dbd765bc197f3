#include "fasr/scene_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace fasr {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string tok;
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  in >> tok;
  return tok;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const ImageBuffer& image) {
  auto out = open_out(path);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image.pixels[i], 0.0, 1.0) * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  if (header_token(in) != "P6") throw std::runtime_error(path.string() + ": not a binary PPM");
  const int w = std::stoi(header_token(in));
  const int h = std::stoi(header_token(in));
  if (std::stoi(header_token(in)) != 255) throw std::runtime_error(path.string() + ": only 8-bit PPM supported");
  in.get();
  ImageBuffer img(w, h);
  std::vector<unsigned char> bytes(img.size());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw std::runtime_error(path.string() + ": truncated pixel data");
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = bytes[i] / 255.0;
  return img;
}

void write_raw_planar(const std::filesystem::path& path, const ImageBuffer& image) {
  static_assert(std::endian::native == std::endian::little, "raw dumps assume a little-endian host");
  auto out = open_out(path);
  const std::size_t plane = static_cast<std::size_t>(image.width) * image.height;
  std::vector<float> data(plane * 3);
  for (int c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < plane; ++p) data[c * plane + p] = static_cast<float>(image.pixels[p * 3 + c]);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

ImageBuffer read_raw_planar(const std::filesystem::path& path, int width, int height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ImageBuffer img(width, height);
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  std::vector<float> data(plane * 3);
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!in) throw std::runtime_error(path.string() + ": size does not match " + std::to_string(width) + "x" + std::to_string(height));
  for (int c = 0; c < 3; ++c)
    for (std::size_t p = 0; p < plane; ++p) img.pixels[p * 3 + c] = data[c * plane + p];
  return img;
}

void write_pgm16(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint16_t>& samples) {
  if (samples.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("write_pgm16: sample count does not match dimensions");
  }
  auto out = open_out(path);
  out << "P5\n" << width << " " << height << "\n65535\n";
  std::vector<unsigned char> bytes(samples.size() * 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace fasr
