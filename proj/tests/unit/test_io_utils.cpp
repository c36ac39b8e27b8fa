#include <cstdlib>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "grounding_kit/atomic_file.hpp"
#include "grounding_kit/feature_cache.hpp"
#include "grounding_kit/image_ops.hpp"
#include "grounding_kit/kv_config.hpp"
#include "grounding_kit/mock_encoder.hpp"
#include "synthetic.hpp"

using namespace gk;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gk_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("png and ppm images round-trip losslessly") {
  std::mt19937_64 rng(50);
  const Image img = testing::random_image(rng, 13, 21);
  const auto dir = scratch("images");
  save_image(img, dir / "a.png");
  save_image(img, dir / "a.ppm");
  CHECK(load_image(dir / "a.png") == img);
  CHECK(load_image(dir / "a.ppm") == img);
  CHECK_THROWS_AS(load_image(dir / "missing.png"), Error);
  CHECK_THROWS_AS(save_image(img, dir / "a.bmp"), Error);
}

TEST_CASE("resize") {
  std::mt19937_64 rng(51);
  const Image img = testing::random_image(rng, 9, 7);
  CHECK(resize_image(img, 9, 7, Interpolation::kBilinear) == img);
  CHECK(resize_image(img, 9, 7, Interpolation::kNearest) == img);
  const Image gray = Image::filled(5, 8, 77, 77, 77);
  const Image big = resize_image(gray, 16, 11, Interpolation::kBilinear);
  CHECK(big.height() == 16);
  CHECK(big.width() == 11);
  for (auto v : big.data()) CHECK(v == 77);
  // Nearest upscaling by an integer factor replicates pixels.
  const Image twice = resize_image(img, 18, 14, Interpolation::kNearest);
  CHECK(twice.at(3, 5, 2) == img.at(1, 2, 2));
}

TEST_CASE("overlay keeps background pixels") {
  const Image img = Image::filled(6, 6, 10, 20, 30);
  MaskProposal m(6, 6);
  for (int r = 2; r < 5; ++r) {
    for (int c = 2; c < 5; ++c) m.set(r, c, true);
  }
  const Image out = overlay_mask(img, m);
  CHECK(out.at(0, 0, 0) == 10);
  CHECK(out.at(3, 3, 0) != 10);
}

TEST_CASE("key-value config") {
  const auto cfg = KeyValueConfig::parse("# comment\nalpha = 0.85\nname=x # trailing\nflag = yes\n");
  CHECK(cfg.get_double("alpha", 0) == 0.85);
  CHECK(cfg.get_or("name", "") == "x");
  CHECK(cfg.get_bool("flag", false));
  CHECK(cfg.get_int("missing", 7) == 7);
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign"), Error);
  CHECK_THROWS_AS(KeyValueConfig::parse("alpha = high").get_double("alpha", 0), Error);

  const auto dir = scratch("kv");
  write_file_atomically(dir / "sub" / "c.cfg", "records = r.json\n");
  const auto loaded = KeyValueConfig::load(dir / "sub" / "c.cfg");
  CHECK(*loaded.get_path("records") == dir / "sub" / "r.json");
  CHECK_THROWS_AS(KeyValueConfig::load(dir / "nope.cfg"), Error);
}

TEST_CASE("atomic writes leave no temporaries") {
  const auto dir = scratch("atomic");
  write_file_atomically(dir / "x.txt", "one");
  write_file_atomically(dir / "x.txt", "two");
  CHECK(read_file(dir / "x.txt") == "two");
  int files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 1);
}

TEST_CASE("feature cache reuses boundary states") {
  const auto dir = scratch("cache");
  std::mt19937_64 rng(52);
  const Image img = testing::random_image(rng, 20, 24);
  MaskProposal m = testing::random_mask(rng, 20, 24, 0.4);
  for (const char* kind : {"mock-residual", "mock-transformer"}) {
    const auto pair = make_encoders(KeyValueConfig::parse(std::string("kind = ") + kind));
    const FeatureCache cache(dir);
    const VisualContextConfig cfg;
    const auto fresh = cache.context(*pair.visual, img, cfg);  // miss, stores
    const auto key = cache.key(*pair.visual, img, cfg.masking.k);
    CHECK(fs::exists(dir / (key + ".gkfc")));
    const auto cached = cache.context(*pair.visual, img, cfg);  // hit
    CHECK(cached.global_feature(m) == ImageContext(*pair.visual, img, cfg).global_feature(m));
    CHECK(fresh.global_feature(m) == cached.global_feature(m));
  }
  // Corrupt entries are ignored.
  for (const auto& e : fs::directory_iterator(dir)) write_file_atomically(e.path(), "garbage");
  const auto pair = make_encoders(KeyValueConfig::parse("kind = mock-residual"));
  const FeatureCache cache(dir);
  CHECK(cache.context(*pair.visual, img, {}).global_feature(m) ==
        ImageContext(*pair.visual, img, {}).global_feature(m));

  setenv(kCacheEnvVar, dir.c_str(), 1);
  CHECK(FeatureCache::from_env().has_value());
  unsetenv(kCacheEnvVar);
  CHECK(!FeatureCache::from_env().has_value());
}
