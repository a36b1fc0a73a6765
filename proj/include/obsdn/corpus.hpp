#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "obsdn/tensor.hpp"

namespace obsdn {

struct ImagePatch {
  Tensor clean;                  // values in [0, 1]
  std::optional<Tensor> noisy;   // same shape as clean when present
  double noise_sigma = 0.0;
};

using Corpus = std::vector<ImagePatch>;

// Procedural gray images: an oriented ramp, a few flat rectangles and disks,
// and a low-frequency sinusoidal texture, clamped to [0, 1].
Tensor synth_image(std::size_t height, std::size_t width, std::uint64_t seed);
Corpus synth_corpus(std::size_t n, std::size_t height, std::size_t width, std::uint64_t seed);

// Every *.pgm / *.ppm in `dir` (non-recursive), in file-name order.
std::vector<Tensor> load_image_dir(const std::filesystem::path& dir);

// `count` random size×size crops. Images smaller than the crop are rejected.
Corpus sample_patches(const std::vector<Tensor>& images, std::size_t count, std::size_t size, std::uint64_t seed);

Corpus corpus_from_images(std::vector<Tensor> images);

}  // namespace obsdn
