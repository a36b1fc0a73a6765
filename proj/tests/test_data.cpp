#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "helpers.hpp"
#include "obsdn/checkpoint.hpp"
#include "obsdn/corpus.hpp"
#include "obsdn/error.hpp"
#include "obsdn/image_io.hpp"
#include "obsdn/noise.hpp"

using namespace obsdn;

namespace {
std::vector<std::uint8_t> make_pgm(std::size_t w, std::size_t h, const std::string& maxval, std::size_t raster) {
  std::string hdr = "P5\n# comment line\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + maxval + "\n";
  std::vector<std::uint8_t> b(hdr.begin(), hdr.end());
  for (std::size_t i = 0; i < raster; ++i) b.push_back(static_cast<std::uint8_t>((i * 37) % 256));
  return b;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;  // about zero, i.e. energy density
  std::size_t n = 0;
};
Moments moments(const Tensor& t) {
  Moments m;
  m.n = t.size();
  for (double v : t.data()) {
    m.mean += v;
    m.var += v * v;
  }
  m.mean /= m.n;
  m.var /= m.n;
  return m;
}
}  // namespace

TEST_CASE("rng streams are reproducible and seed-dependent") {
  Rng a(5), b(5), c(6);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next();
    CHECK(va == b.next());
    if (i == 0) CHECK(va != c.next());
  }
  CHECK(derive_seed(1, seed_domain::corpus, 0) != derive_seed(1, seed_domain::corpus, 1));
  CHECK(derive_seed(1, seed_domain::corpus, 0) != derive_seed(1, seed_domain::shuffle, 0));
}

TEST_CASE("splitmix64 reference values") {
  // First outputs for state 0 from the reference implementation.
  std::uint64_t s = 0;
  CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("pgm round trip preserves bytes") {
  const auto bytes = make_pgm(5, 3, "255", 15);
  const Tensor img = decode_netpbm(bytes);
  CHECK(img.shape() == Shape{1, 3, 5});
  CHECK(img[1] == 37 / 255.0);
  const auto again = encode_netpbm(img);
  CHECK(std::vector<std::uint8_t>(again.end() - 15, again.end()) ==
        std::vector<std::uint8_t>(bytes.end() - 15, bytes.end()));
  CHECK(encode_netpbm(decode_netpbm(again)) == again);
}

TEST_CASE("ppm decodes to planar RGB and back") {
  std::string hdr = "P6 2 1 255\n";
  std::vector<std::uint8_t> b(hdr.begin(), hdr.end());
  for (std::uint8_t v : {10, 20, 30, 40, 50, 60}) b.push_back(v);
  const Tensor img = decode_netpbm(b);
  REQUIRE(img.shape() == Shape{3, 1, 2});
  CHECK(img.at(0, 0, 1) == 40 / 255.0);
  CHECK(img.at(2, 0, 0) == 30 / 255.0);
  const auto enc = encode_netpbm(img);
  CHECK(std::vector<std::uint8_t>(enc.end() - 6, enc.end()) == std::vector<std::uint8_t>(b.end() - 6, b.end()));
}

TEST_CASE("all-black pgm is all zeros") {
  std::string hdr = "P5 4 4 255\n";
  std::vector<std::uint8_t> b(hdr.begin(), hdr.end());
  b.resize(b.size() + 16, 0);
  const Tensor img = decode_netpbm(b);
  for (double v : img.data()) CHECK(v == 0.0);
}

TEST_CASE("netpbm error paths are distinct") {
  CHECK_THROWS_AS(decode_netpbm(make_pgm(4, 4, "65535", 32)), UnsupportedFormatError);
  CHECK_THROWS_AS(decode_netpbm(make_pgm(4, 4, "255", 10)), ShortDataError);
  const std::string p2 = "P2 1 1 255\n0\n";
  CHECK_THROWS_AS(decode_netpbm(std::vector<std::uint8_t>(p2.begin(), p2.end())), UnsupportedFormatError);
  const std::string junk = "P5 x 1 255\n";
  CHECK_THROWS_AS(decode_netpbm(std::vector<std::uint8_t>(junk.begin(), junk.end())), MalformedHeaderError);
  const std::string notpnm = "GIF89a";
  CHECK_THROWS_AS(decode_netpbm(std::vector<std::uint8_t>(notpnm.begin(), notpnm.end())), MalformedHeaderError);
}

TEST_CASE("write clamps and rounds") {
  const Tensor img(Shape{1, 1, 4}, std::vector<double>{-0.5, 0.5, 1.5, 100.4 / 255.0});
  const auto enc = encode_netpbm(img);
  CHECK(enc[enc.size() - 4] == 0);
  CHECK(enc[enc.size() - 3] == 128);
  CHECK(enc[enc.size() - 2] == 255);
  CHECK(enc[enc.size() - 1] == 100);
}

TEST_CASE("image files and directories") {
  const auto dir = std::filesystem::temp_directory_path() / "obsdn_test_data_dir";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto a = synth_image(20, 24, 1);
  const auto b = synth_image(20, 24, 2);
  write_image(dir / "b.pgm", b);
  write_image(dir / "a.pgm", a);
  write_file(dir / "notes.txt", std::vector<std::uint8_t>{'x'});
  const auto imgs = load_image_dir(dir);
  REQUIRE(imgs.size() == 2);
  CHECK(encode_netpbm(imgs[0]) == encode_netpbm(a));

  const auto patches = sample_patches(imgs, 10, 8, 3);
  CHECK(patches.size() == 10);
  for (const auto& p : patches) {
    CHECK(p.clean.shape() == Shape{1, 8, 8});
    for (double v : p.clean.data()) CHECK((v >= 0.0 && v <= 1.0));
  }
  CHECK_THROWS_AS(sample_patches(imgs, 1, 64, 0), ShapeError);
}

TEST_CASE("synthetic corpus is deterministic, in range, with moderate contrast") {
  const auto c1 = synth_corpus(64, 32, 32, 123);
  const auto c2 = synth_corpus(64, 32, 32, 123);
  double s = 0.0, s2 = 0.0, n = 0.0;
  for (std::size_t i = 0; i < c1.size(); ++i) {
    CHECK(c1[i].clean == c2[i].clean);
    for (double v : c1[i].clean.data()) {
      CHECK((v >= 0.0 && v <= 1.0));
      s += v;
      s2 += v * v;
      n += 1.0;
    }
  }
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  CHECK(sd >= 0.1);
  CHECK(sd <= 0.4);
  CHECK(synth_corpus(1, 32, 32, 124)[0].clean != c1[0].clean);
  CHECK_THROWS_AS(synth_corpus(0, 32, 32, 1), ValueError);
}

TEST_CASE("uniform noise variance matches eps_hat^2") {
  Rng rng(1);
  const double eps_hat = 15.0 / 255.0;
  const Tensor v = sample_noise(UniformNoise{eps_hat}, Shape{1000000}, rng);
  const auto m = moments(v);
  CHECK(std::abs(m.var - eps_hat * eps_hat) / (eps_hat * eps_hat) < 0.02);
  CHECK(max_abs(v) <= std::sqrt(3.0) * eps_hat);
}

TEST_CASE("fixed gaussian noise: zero sigma, CLT mean bound, energy density") {
  Rng rng(2);
  const Tensor zero = sample_noise(GaussianFixed{0.0}, Shape{100}, rng);
  for (double v : zero.data()) CHECK(v == 0.0);
  const double sigma = 25.0 / 255.0;
  const Tensor v = sample_noise(GaussianFixed{sigma}, Shape{1000000}, rng);
  const auto m = moments(v);
  CHECK(std::abs(m.mean) < 3.0 * sigma / std::sqrt(1e6));
  CHECK(std::abs(energy_density(v) - sigma * sigma) / (sigma * sigma) < 0.02);
}

TEST_CASE("expected energy density stays below the level squared") {
  // Family: sigma ~ U(0, eps) once per call, so average over many calls.
  const double eps = 25.0 / 255.0;
  Rng rng(3);
  std::vector<double> per_call;
  for (int i = 0; i < 1000; ++i) per_call.push_back(energy_density(sample_noise(GaussianFamily{eps}, Shape{1000}, rng)));
  double mean = 0.0;
  for (double e : per_call) mean += e;
  mean /= per_call.size();
  double var = 0.0;
  for (double e : per_call) var += (e - mean) * (e - mean);
  const double se = std::sqrt(var / (per_call.size() - 1) / per_call.size());
  CHECK(std::abs(mean - eps * eps / 3.0) < 3.0 * se);
  CHECK(mean < eps * eps);

  for (const NoiseSpec& spec : {NoiseSpec{GaussianFixed{eps}}, NoiseSpec{UniformNoise{eps}}}) {
    CAPTURE(describe(spec));
    const Tensor v = sample_noise(spec, Shape{1000000}, rng);
    const auto m = moments(v);
    const double se_mean = std::sqrt(m.var / m.n);
    CHECK(std::abs(m.mean) < 3.0 * se_mean);
    // E[v^2] = level^2; the sample sits within 3 standard errors of it.
    double fourth = 0.0;
    for (double x : v.data()) fourth += x * x * x * x;
    fourth /= m.n;
    const double se_energy = std::sqrt((fourth - m.var * m.var) / m.n);
    CHECK(m.var <= eps * eps + 3.0 * se_energy);
  }
}

TEST_CASE("family noise draws its sigma inside [0, eps]") {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto d = draw_noise(GaussianFamily{0.1}, Shape{10}, rng);
    CHECK(d.sigma >= 0.0);
    CHECK(d.sigma <= 0.1);
  }
}

TEST_CASE("energy density edge cases") {
  CHECK(energy_density(Tensor(Shape{10})) == 0.0);
  CHECK(energy_density(Tensor(Shape{7}, 0.3)) == doctest::Approx(0.09).epsilon(1e-14));
  CHECK_THROWS_AS(validate(NoiseSpec{GaussianFixed{-1.0}}), ValueError);
}
