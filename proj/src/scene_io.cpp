#include "fasr/scene_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fasr {

namespace {

void append_real(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, " %.17g", v);
  out += buf;
}

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next non-empty line split into tokens; throws at end of input.
  std::vector<std::string> next(const char* expecting) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::istringstream ls(line);
      std::vector<std::string> tokens;
      for (std::string t; ls >> t;) tokens.push_back(t);
      if (!tokens.empty()) return tokens;
    }
    throw SceneParseError(line_no_ + 1, std::string("unexpected end of file, expected ") + expecting);
  }

  bool at_end() {
    std::string line;
    const auto pos = in_.tellg();
    int skipped = 0;
    while (std::getline(in_, line)) {
      ++skipped;
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        in_.clear();
        in_.seekg(pos);
        return false;
      }
    }
    line_no_ += skipped;
    return true;
  }

  int line() const { return line_no_; }

 private:
  std::istringstream in_;
  int line_no_ = 0;
};

double parse_real(const std::string& tok, int line) {
  double v = 0.0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw SceneParseError(line, "invalid number '" + tok + "'");
  return v;
}

long long parse_int(const std::string& tok, int line) {
  long long v = 0;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw SceneParseError(line, "invalid integer '" + tok + "'");
  return v;
}

void expect_count(const std::vector<std::string>& tokens, std::size_t n, const char* what, int line) {
  if (tokens.size() != n) {
    throw SceneParseError(line, std::string(what) + " record needs " + std::to_string(n) +
                                    " fields, got " + std::to_string(tokens.size()));
  }
}

long long keyed_int(LineReader& r, const char* key) {
  auto t = r.next(key);
  if (t.size() != 2 || t[0] != key) throw SceneParseError(r.line(), std::string("expected '") + key + " <n>'");
  return parse_int(t[1], r.line());
}

}  // namespace

std::string encode_scene(const GaussianCloud& cloud, const std::vector<Camera>& cameras) {
  std::string out = kSceneHeader;
  out += "\nsh_degree " + std::to_string(cloud.sh_degree);
  out += "\ngeneration " + std::to_string(cloud.generation);
  out += "\ngaussians " + std::to_string(cloud.size()) + "\n";
  for (const Gaussian3D& g : cloud.gaussians) {
    out += "g";
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(cloud, a)) continue;
      for (double v : values(g, a)) append_real(out, v);
    }
    out += "\n";
  }
  out += "cameras " + std::to_string(cameras.size()) + "\n";
  for (const Camera& c : cameras) {
    out += "c " + c.id + " " + std::to_string(c.width) + " " + std::to_string(c.height);
    append_real(out, c.focal);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) append_real(out, c.rotation(i, j));
    for (int i = 0; i < 3; ++i) append_real(out, c.translation[i]);
    out += "\n";
  }
  return out;
}

SceneFile decode_scene(const std::string& text) {
  LineReader r(text);
  {
    auto t = r.next("header");
    std::string header;
    for (std::size_t i = 0; i < t.size(); ++i) header += (i ? " " : "") + t[i];
    if (t.size() == 2 && t[0] == "fasr-scene" && header != kSceneHeader) {
      throw SceneParseError(r.line(), "unsupported scene version '" + t[1] + "' (expected v1)");
    }
    if (header != kSceneHeader) throw SceneParseError(r.line(), "missing 'fasr-scene v1' header");
  }
  SceneFile file;
  const long long sh = keyed_int(r, "sh_degree");
  if (sh != 0 && sh != 1) throw SceneParseError(r.line(), "sh_degree must be 0 or 1");
  file.cloud.sh_degree = static_cast<int>(sh);
  const long long gen = keyed_int(r, "generation");
  if (gen < 0) throw SceneParseError(r.line(), "negative generation");
  file.cloud.generation = static_cast<std::uint64_t>(gen);

  const long long n_g = keyed_int(r, "gaussians");
  if (n_g < 0) throw SceneParseError(r.line(), "negative gaussian count");
  std::size_t fields = 1;
  for (Attribute a : kAllAttributes) {
    if (has_attribute(file.cloud, a)) fields += attribute_size(a);
  }
  file.cloud.gaussians.resize(static_cast<std::size_t>(n_g));
  for (Gaussian3D& g : file.cloud.gaussians) {
    auto t = r.next("gaussian record");
    if (t[0] != "g") throw SceneParseError(r.line(), "expected gaussian record 'g ...'");
    expect_count(t, fields, "gaussian", r.line());
    std::size_t k = 1;
    for (Attribute a : kAllAttributes) {
      if (!has_attribute(file.cloud, a)) continue;
      for (double& v : values(g, a)) v = parse_real(t[k++], r.line());
    }
    if (g.rot.norm() == 0.0) throw SceneParseError(r.line(), "zero quaternion");
  }

  const long long n_c = keyed_int(r, "cameras");
  if (n_c < 0) throw SceneParseError(r.line(), "negative camera count");
  for (long long i = 0; i < n_c; ++i) {
    auto t = r.next("camera record");
    if (t[0] != "c") throw SceneParseError(r.line(), "expected camera record 'c ...'");
    expect_count(t, 17, "camera", r.line());
    Camera c;
    c.id = t[1];
    c.width = static_cast<int>(parse_int(t[2], r.line()));
    c.height = static_cast<int>(parse_int(t[3], r.line()));
    c.focal = parse_real(t[4], r.line());
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) c.rotation(a, b) = parse_real(t[5 + 3 * a + b], r.line());
    for (int a = 0; a < 3; ++a) c.translation[a] = parse_real(t[14 + a], r.line());
    try {
      validate_camera(c);
    } catch (const std::invalid_argument& e) {
      throw SceneParseError(r.line(), e.what());
    }
    file.cameras.push_back(std::move(c));
  }
  if (!r.at_end()) throw SceneParseError(r.line() + 1, "trailing content after camera records");
  return file;
}

void save_scene(const std::filesystem::path& path, const GaussianCloud& cloud,
                const std::vector<Camera>& cameras) {
  for (const Camera& c : cameras) {
    if (c.id.empty() || c.id.find_first_of(" \t\n") != std::string::npos) {
      throw std::invalid_argument("camera id must be non-empty and whitespace-free");
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << encode_scene(cloud, cameras);
  if (!out) throw std::runtime_error("failed writing scene file " + path.string());
}

SceneFile load_scene(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scene file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_scene(ss.str());
}

}  // namespace fasr
