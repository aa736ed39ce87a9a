#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noisecam/tensor.hpp"

namespace ncam {

struct LabeledImages {
  std::vector<Tensor> images;  // 32x32x3 in [0, 1]
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return images.size(); }
  /// Throws DataError when lengths differ or a label is out of range.
  void check() const;
};

const std::vector<std::string>& shape_class_names();

/// Procedurally rendered shapes (circle, square, triangle, ring, cross,
/// stripes) with random placement, scale, colors and background noise.
/// Class-major order; identical for identical seeds.
LabeledImages gen_dataset(int n_per_class, std::uint64_t seed);

/// Directory layout: images.ntf (N x 32 x 32 x 3), labels.txt, classes.txt.
/// Returns the written paths.
std::vector<std::filesystem::path> save_dataset(const LabeledImages& data, const std::filesystem::path& dir);
LabeledImages load_dataset(const std::filesystem::path& dir);

}  // namespace ncam
