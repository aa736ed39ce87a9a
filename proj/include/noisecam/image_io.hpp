#pragma once

#include <filesystem>

#include "noisecam/cluster.hpp"
#include "noisecam/tensor.hpp"

namespace ncam {

/// Binary PGM (P5, maxval 255). Accepts HxW or HxWx1 values in [0, 1];
/// values outside are clipped.
void write_pgm(const std::filesystem::path& path, const Tensor& map);
/// Returns HxW in [0, 1]. Throws DataError on malformed files.
Tensor read_pgm(const std::filesystem::path& path);

/// Binary PPM (P6, maxval 255) from HxWx3 values in [0, 1].
void write_ppm(const std::filesystem::path& path, const Tensor& rgb);
Tensor read_ppm(const std::filesystem::path& path);

/// Maps a signed noise field to [0, 1] around 0.5 for display.
Tensor noise_to_display(const Tensor& noise);

/// HxW canvas: clustered points get a palette color, noise points gray,
/// everything else black.
void write_cluster_overlay(const std::filesystem::path& path, std::size_t height, std::size_t width,
                           const ActivePointSet& points, const ClusterResult& clusters);

}  // namespace ncam
