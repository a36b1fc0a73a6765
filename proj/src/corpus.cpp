#include "obsdn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "obsdn/error.hpp"
#include "obsdn/image_io.hpp"
#include "obsdn/rng.hpp"

namespace obsdn {

Tensor synth_image(std::size_t height, std::size_t width, std::uint64_t seed) {
  Rng rng(seed);
  Tensor img(Shape{1, height, width});
  const double h = static_cast<double>(height);
  const double w = static_cast<double>(width);
  const double scale = std::max(h, w);

  // Ramp.
  const double base = rng.uniform(0.25, 0.75);
  const double theta = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double slope = rng.uniform(-0.5, 0.5);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x) {
      const double u = (std::cos(theta) * (x - w / 2) + std::sin(theta) * (y - h / 2)) / scale;
      img.at(0, y, x) = base + slope * u;
    }

  // Flat shapes painted over the ramp.
  const std::size_t n_shapes = 2 + rng.below(4);
  for (std::size_t s = 0; s < n_shapes; ++s) {
    const double level = rng.uniform();
    const double cx = rng.uniform(0.0, w);
    const double cy = rng.uniform(0.0, h);
    const double rx = rng.uniform(0.1, 0.4) * w;
    const double ry = rng.uniform(0.1, 0.4) * h;
    const bool disk = rng.uniform() < 0.5;
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = (x - cx) / rx;
        const double dy = (y - cy) / ry;
        const bool inside = disk ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
        if (inside) img.at(0, y, x) = level;
      }
  }

  // Band-limited texture.
  const std::size_t n_waves = 1 + rng.below(3);
  for (std::size_t k = 0; k < n_waves; ++k) {
    const double amp = rng.uniform(0.02, 0.08);
    const double freq = rng.uniform(1.0, 6.0) * 2.0 * std::numbers::pi / scale;
    const double dir = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t y = 0; y < height; ++y)
      for (std::size_t x = 0; x < width; ++x)
        img.at(0, y, x) += amp * std::sin(freq * (std::cos(dir) * x + std::sin(dir) * y) + phase);
  }

  return clip(std::move(img), 0.0, 1.0);
}

Corpus synth_corpus(std::size_t n, std::size_t height, std::size_t width, std::uint64_t seed) {
  if (n == 0) throw ValueError("synth_corpus: n must be >= 1");
  if (height == 0 || width == 0) throw ValueError("synth_corpus: image size must be positive");
  Corpus out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(ImagePatch{synth_image(height, width, derive_seed(seed, seed_domain::corpus, i)), std::nullopt, 0.0});
  return out;
}

std::vector<Tensor> load_image_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no .pgm/.ppm files in " + dir.string());
  std::vector<Tensor> images;
  images.reserve(files.size());
  for (const auto& f : files) images.push_back(read_image(f));
  return images;
}

Corpus sample_patches(const std::vector<Tensor>& images, std::size_t count, std::size_t size, std::uint64_t seed) {
  if (images.empty()) throw ValueError("sample_patches: no images");
  if (size == 0) throw ValueError("sample_patches: patch size must be positive");
  for (const auto& img : images)
    if (img.rank() != 3 || img.dim(1) < size || img.dim(2) < size)
      throw ShapeError("sample_patches: image " + shape_str(img.shape()) + " is smaller than a " +
                       std::to_string(size) + "x" + std::to_string(size) + " patch");
  Rng rng(derive_seed(seed, seed_domain::patches));
  Corpus out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    const Tensor& img = images[rng.below(images.size())];
    const std::size_t c = img.dim(0);
    const std::size_t y0 = rng.below(img.dim(1) - size + 1);
    const std::size_t x0 = rng.below(img.dim(2) - size + 1);
    Tensor patch(Shape{c, size, size});
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < size; ++y)
        for (std::size_t x = 0; x < size; ++x) patch.at(ch, y, x) = std::clamp(img.at(ch, y0 + y, x0 + x), 0.0, 1.0);
    out.push_back(ImagePatch{std::move(patch), std::nullopt, 0.0});
  }
  return out;
}

Corpus corpus_from_images(std::vector<Tensor> images) {
  Corpus out;
  out.reserve(images.size());
  for (auto& img : images) out.push_back(ImagePatch{clip(std::move(img), 0.0, 1.0), std::nullopt, 0.0});
  return out;
}

}  // namespace obsdn
