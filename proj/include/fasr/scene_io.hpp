#pragma once

#include "fasr/scene.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fasr {

inline constexpr const char* kSceneHeader = "fasr-scene v1";

class SceneParseError : public std::runtime_error {
 public:
  SceneParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct SceneFile {
  GaussianCloud cloud;
  std::vector<Camera> cameras;
};

/// Text encoding with `%.17g` reals, so save/load round trips bit-exactly.
std::string encode_scene(const GaussianCloud& cloud, const std::vector<Camera>& cameras);
SceneFile decode_scene(const std::string& text);

void save_scene(const std::filesystem::path& path, const GaussianCloud& cloud,
                const std::vector<Camera>& cameras);
SceneFile load_scene(const std::filesystem::path& path);

/// Binary PPM (P6, 8-bit); channels are clamped to [0, 1] before quantization.
void write_ppm(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_ppm(const std::filesystem::path& path);

/// Headerless little-endian float32 dump, one plane per channel (R plane, G plane, B plane).
void write_raw_planar(const std::filesystem::path& path, const ImageBuffer& image);
ImageBuffer read_raw_planar(const std::filesystem::path& path, int width, int height);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples), row-major.
void write_pgm16(const std::filesystem::path& path, int width, int height,
                 const std::vector<std::uint16_t>& samples);

}  // namespace fasr
