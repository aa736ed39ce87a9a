#include "noisecam/image_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ncam {

namespace {

unsigned char to_byte(float v) {
  if (!(v > 0.0f)) return 0;
  if (v >= 1.0f) return 255;
  return static_cast<unsigned char>(std::lround(v * 255.0f));
}

void write_netpbm(const std::filesystem::path& path, const char* magic, std::size_t h, std::size_t w,
                  const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << magic << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string token(std::istream& in) {
  std::string t;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {}
      continue;
    }
    if (std::isspace(ch)) {
      if (!t.empty()) return t;
      continue;
    }
    t.push_back(char(ch));
  }
  return t;
}

Tensor read_netpbm(const std::filesystem::path& path, const std::string& magic, std::size_t channels) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  if (token(in) != magic) throw DataError("'" + path.string() + "' is not a " + magic + " file");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(token(in));
    h = std::stoul(token(in));
    maxval = std::stoul(token(in));
  } catch (const std::exception&) {
    throw DataError("malformed header in '" + path.string() + "'");
  }
  if (maxval == 0 || maxval > 255) throw DataError("unsupported maxval in '" + path.string() + "'");
  std::vector<unsigned char> bytes(h * w * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), std::streamsize(bytes.size()));
  if (in.gcount() != std::streamsize(bytes.size())) throw DataError("truncated pixel data in '" + path.string() + "'");
  Tensor t(channels == 1 ? Shape{h, w} : Shape{h, w, channels});
  for (std::size_t i = 0; i < bytes.size(); ++i) t[i] = snap_pixel(float(bytes[i]) / float(maxval));
  return t;
}

}  // namespace

void write_pgm(const std::filesystem::path& path, const Tensor& map) {
  if (!(map.rank() == 2 || (map.rank() == 3 && map.dim(2) == 1)))
    throw ShapeError("PGM needs HxW or HxWx1, got " + to_string(map.shape()));
  std::vector<unsigned char> bytes(map.size());
  std::transform(map.data().begin(), map.data().end(), bytes.begin(), to_byte);
  write_netpbm(path, "P5", map.dim(0), map.dim(1), bytes);
}

Tensor read_pgm(const std::filesystem::path& path) { return read_netpbm(path, "P5", 1); }

void write_ppm(const std::filesystem::path& path, const Tensor& rgb) {
  if (rgb.rank() != 3 || rgb.dim(2) != 3) throw ShapeError("PPM needs HxWx3, got " + to_string(rgb.shape()));
  std::vector<unsigned char> bytes(rgb.size());
  std::transform(rgb.data().begin(), rgb.data().end(), bytes.begin(), to_byte);
  write_netpbm(path, "P6", rgb.dim(0), rgb.dim(1), bytes);
}

Tensor read_ppm(const std::filesystem::path& path) { return read_netpbm(path, "P6", 3); }

Tensor noise_to_display(const Tensor& noise) {
  const float m = noise.max_abs();
  Tensor out(noise.shape(), 0.5f);
  if (m == 0.0f) return out;
  for (std::size_t i = 0; i < noise.size(); ++i) out[i] = 0.5f + 0.5f * noise[i] / m;
  return out;
}

void write_cluster_overlay(const std::filesystem::path& path, std::size_t height, std::size_t width,
                           const ActivePointSet& points, const ClusterResult& clusters) {
  static constexpr std::array<std::array<float, 3>, 8> palette{{{0.90f, 0.10f, 0.10f},
                                                                {0.10f, 0.70f, 0.20f},
                                                                {0.15f, 0.35f, 0.95f},
                                                                {0.95f, 0.80f, 0.10f},
                                                                {0.80f, 0.20f, 0.85f},
                                                                {0.10f, 0.85f, 0.85f},
                                                                {1.00f, 0.50f, 0.00f},
                                                                {0.55f, 0.35f, 0.15f}}};
  if (clusters.labels.size() != points.size()) throw ShapeError("cluster labels do not match point count");
  Tensor img({height, width, 3});
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [r, c] = points[i];
    if (r < 0 || c < 0 || std::size_t(r) >= height || std::size_t(c) >= width)
      throw ShapeError("cluster point outside overlay bounds");
    const int l = clusters.labels[i];
    for (std::size_t k = 0; k < 3; ++k)
      img.at(std::size_t(r), std::size_t(c), k) = l < 0 ? 0.5f : palette[std::size_t(l) % palette.size()][k];
  }
  write_ppm(path, img);
}

}  // namespace ncam
