#include "noisecam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace ncam {

void LabeledImages::check() const {
  if (images.size() != labels.size()) throw DataError("dataset has mismatched image/label counts");
  for (int l : labels)
    if (l < 0 || l >= static_cast<int>(class_names.size()))
      throw DataError("label " + std::to_string(l) + " outside " + std::to_string(class_names.size()) + " classes");
}

const std::vector<std::string>& shape_class_names() {
  static const std::vector<std::string> names = {"circle", "square", "triangle", "ring", "cross", "stripes"};
  return names;
}

namespace {

constexpr int kSide = 32;

float luminance(const float* rgb) { return 0.299f * rgb[0] + 0.587f * rgb[1] + 0.114f * rgb[2]; }

bool inside(int cls, float dx, float dy, float r, float period, bool vertical) {
  const float d = std::hypot(dx, dy);
  switch (cls) {
    case 0: return d <= r;
    case 1: return std::max(std::abs(dx), std::abs(dy)) <= 0.8f * r;
    case 2: {
      const float top = -0.8f * r, bottom = 0.8f * r;
      if (dy < top || dy > bottom) return false;
      return std::abs(dx) <= (dy - top) / (bottom - top) * r;
    }
    case 3: return d <= r && d >= 0.55f * r;
    case 4: return (std::abs(dx) <= 0.28f * r && std::abs(dy) <= r) || (std::abs(dy) <= 0.28f * r && std::abs(dx) <= r);
    case 5: {
      if (std::max(std::abs(dx), std::abs(dy)) > r) return false;
      const float t = (vertical ? dx : dy) + r;
      return static_cast<int>(std::floor(t / period)) % 2 == 0;
    }
  }
  return false;
}

Tensor render(int cls, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> unit(0.0f, 1.0f);
  float bg[3], fg[3];
  for (float& v : bg) v = unit(rng);
  do {
    for (float& v : fg) v = unit(rng);
  } while (std::abs(luminance(fg) - luminance(bg)) < 0.3f);

  const float r = std::uniform_real_distribution<float>(7.0f, 11.0f)(rng);
  const float cx = std::uniform_real_distribution<float>(r, kSide - r)(rng);
  const float cy = std::uniform_real_distribution<float>(r, kSide - r)(rng);
  const float period = unit(rng) < 0.5f ? 3.0f : 4.0f;
  const bool vertical = unit(rng) < 0.5f;
  const float noise_sd = std::uniform_real_distribution<float>(0.0f, 0.06f)(rng);
  std::normal_distribution<float> noise(0.0f, 1.0f);

  Tensor img({kSide, kSide, 3});
  for (int y = 0; y < kSide; ++y) {
    for (int x = 0; x < kSide; ++x) {
      const bool on = inside(cls, x + 0.5f - cx, y + 0.5f - cy, r, period, vertical);
      for (int c = 0; c < 3; ++c) {
        const float base = on ? fg[c] : bg[c];
        img.at(y, x, c) = snap_pixel(base + noise_sd * noise(rng));
      }
    }
  }
  return img;
}

}  // namespace

LabeledImages gen_dataset(int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw ConfigError("n_per_class must be >= 1");
  LabeledImages data;
  data.class_names = shape_class_names();
  std::mt19937_64 rng(seed);
  const int classes = static_cast<int>(data.class_names.size());
  for (int cls = 0; cls < classes; ++cls) {
    for (int i = 0; i < n_per_class; ++i) {
      data.images.push_back(render(cls, rng));
      data.labels.push_back(cls);
    }
  }
  return data;
}

std::vector<std::filesystem::path> save_dataset(const LabeledImages& data, const std::filesystem::path& dir) {
  data.check();
  std::filesystem::create_directories(dir);
  Tensor all({data.size(), kSide, kSide, 3});
  std::size_t off = 0;
  for (const auto& img : data.images) {
    if (img.shape() != Shape{kSide, kSide, 3}) throw ShapeError("dataset images must be 32x32x3");
    std::copy(img.data().begin(), img.data().end(), all.data().begin() + static_cast<long>(off));
    off += img.size();
  }
  save_ntf(dir / "images.ntf", all);
  std::ofstream labels(dir / "labels.txt");
  for (int l : data.labels) labels << l << '\n';
  std::ofstream classes(dir / "classes.txt");
  for (const auto& c : data.class_names) classes << c << '\n';
  labels.close();
  classes.close();
  if (!labels || !classes) throw DataError("failed writing dataset to " + dir.string());
  return {dir / "images.ntf", dir / "labels.txt", dir / "classes.txt"};
}

LabeledImages load_dataset(const std::filesystem::path& dir) {
  LabeledImages data;
  const Tensor all = load_ntf(dir / "images.ntf");
  if (all.rank() != 4 || all.dim(1) != kSide || all.dim(2) != kSide || all.dim(3) != 3)
    throw DataError(dir.string() + ": images.ntf must be N x 32 x 32 x 3");
  std::ifstream classes(dir / "classes.txt");
  if (!classes) throw DataError("cannot open " + (dir / "classes.txt").string());
  for (std::string line; std::getline(classes, line);)
    if (!line.empty()) data.class_names.push_back(line);
  std::ifstream labels(dir / "labels.txt");
  if (!labels) throw DataError("cannot open " + (dir / "labels.txt").string());
  for (int l; labels >> l;) data.labels.push_back(l);
  const std::size_t per = kSide * kSide * 3;
  for (std::size_t i = 0; i < all.dim(0); ++i) {
    std::vector<float> v(all.data().begin() + static_cast<long>(i * per),
                         all.data().begin() + static_cast<long>((i + 1) * per));
    data.images.emplace_back(Shape{kSide, kSide, 3}, std::move(v));
  }
  data.check();
  return data;
}

}  // namespace ncam
