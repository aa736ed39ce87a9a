#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncam {

// Error families. The CLI maps these onto exit codes (usage 2, data 3, numeric 4).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Dense row-major float32 array. Images and feature maps are H x W x C.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const& noexcept { return data_; }
  std::vector<float> values() && noexcept { return std::move(data_); }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  // H x W x C accessors.
  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }

  Tensor reshaped(Shape shape) const;
  bool all_finite() const noexcept;
  float max_abs() const noexcept;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, float s);
Tensor clamp(const Tensor& t, float lo, float hi);

// Pixel grid: multiples of 2^-24 in [0, 1]. Differences of two grid values
// are exact in f32, so cleaned + (original - cleaned) == original.
inline constexpr float kPixelStep = 1.0f / 16777216.0f;
float snap_pixel(float v);
Tensor snap_pixels(const Tensor& t);

// "NTF v1": "NTF1", u32 rank, rank x u32 extents, little-endian f32 payload.
void write_ntf(std::ostream& out, const Tensor& t);
Tensor read_ntf(std::istream& in);
void save_ntf(const std::filesystem::path& path, const Tensor& t);
Tensor load_ntf(const std::filesystem::path& path);

namespace io {
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
void put_string(std::ostream& out, const std::string& s);
std::string get_string(std::istream& in);
}  // namespace io

}  // namespace ncam
