#include <cmath>
#include <random>

#include "doctest.h"
#include "grounding_kit/baselines.hpp"
#include "grounding_kit/mock_encoder.hpp"
#include "synthetic.hpp"

using namespace gk;

namespace {

MaskProposal rows_mask(int h, int w, int r0, int r1) {
  MaskProposal m(h, w);
  for (int r = r0; r < r1; ++r) {
    for (int c = 0; c < w; ++c) m.set(r, c, true);
  }
  return m;
}

EncoderPair encoders(const std::string& kind) {
  return make_encoders(KeyValueConfig::parse("kind = " + kind + "\nseed = 31"));
}

double cos_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return d / std::sqrt(na * nb);
}

}  // namespace

TEST_CASE("grad-cam map matches an elementwise oracle") {
  std::mt19937_64 rng(40);
  std::normal_distribution<double> n;
  FeatureGrid a(3, {2, 3}), g(3, {2, 3});
  for (auto& v : a.values()) v = n(rng);
  for (auto& v : g.values()) v = n(rng);
  const auto map = grad_cam_map(a, g);
  for (int i = 0; i < 6; ++i) {
    double acc = 0;
    for (int c = 0; c < 3; ++c) {
      double w = 0;
      for (int j = 0; j < 6; ++j) w += g.at(c, j);
      acc += w / 6 * a.at(c, i);
    }
    CHECK(map[static_cast<std::size_t>(i)] == doctest::Approx(std::max(acc, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("mask-mean scoring") {
  const ProposalSet props{{rows_mask(4, 4, 2, 4), MaskProposal::full(4, 4), MaskProposal(4, 4)}};
  const auto s = mask_mean_scores({0.1, 0.2, 0.3, 0.4}, {2, 2}, props);
  CHECK(s[0] == doctest::Approx(0.35));
  CHECK(s[1] == doctest::Approx(0.25));
  CHECK(s[2] == kEmptyProposalScore);

  const ProposalSet two{{rows_mask(4, 4, 0, 2), rows_mask(4, 4, 2, 4)}};
  const auto uniform = mask_mean_scores({0.6, 0.6, 0.6, 0.6}, {2, 2}, two);
  CHECK(std::abs(uniform[0] - uniform[1]) < 1e-9);

  // Hot region inside proposal 0 only.
  const auto hot = mask_mean_scores({0.0, 0.9, 0.0, 0.0}, {2, 2}, two);
  CHECK(select_mask(to_scored(hot)).proposal_index == 0);
}

TEST_CASE("disjoint cell-aligned masks partition the map") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> map(49);
  for (auto& v : map) v = u(rng);
  // 14x14 image over a 7x7 grid: bands of 2, 3 and 2 cell rows.
  const ProposalSet bands{{rows_mask(14, 14, 0, 4), rows_mask(14, 14, 4, 10), rows_mask(14, 14, 10, 14)}};
  const auto s = mask_mean_scores(map, {7, 7}, bands);
  const double weighted = (s[0] * 14 + s[1] * 21 + s[2] * 14) / 49;
  double mean = 0;
  for (double v : map) mean += v;
  CHECK(std::abs(weighted - mean / 49) < 1e-12);
}

TEST_CASE("dense similarity map matches a per-cell oracle") {
  const MockResidualEncoder enc([] {
    MockEncoderConfig c;
    c.seed = 42;
    return c;
  }());
  std::mt19937_64 rng(42);
  const FeatureGrid grid = enc.backbone_features(testing::random_image(rng, 20, 20));
  const EmbeddingVector t = MockTextEncoder(enc.info().embed_dim, 77, 1).encode_text("dog");
  const AttentionPoolWeights& w = *enc.pooling_weights();
  const auto map = dense_similarity_map(w, grid, t);
  for (int cell = 0; cell < grid.shape().cells(); cell += 5) {
    std::vector<double> v(static_cast<std::size_t>(grid.channels()));
    for (int i = 0; i < grid.channels(); ++i) {
      double acc = w.v_bias(i);
      for (int j = 0; j < grid.channels(); ++j) acc += w.v_proj(i, j) * grid.at(j, cell);
      v[static_cast<std::size_t>(i)] = acc;
    }
    std::vector<double> out(static_cast<std::size_t>(w.embed_dim()));
    for (int d = 0; d < w.embed_dim(); ++d) {
      double acc = w.c_bias(d);
      for (int i = 0; i < grid.channels(); ++i) acc += w.c_proj(d, i) * v[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(d)] = acc;
    }
    const std::vector<double> tv(t.values().begin(), t.values().end());
    CHECK(std::abs(map[static_cast<std::size_t>(cell)] - cos_oracle(out, tv)) < 1e-12);
  }
}

TEST_CASE("baseline scores on the mock encoders") {
  const auto ds = testing::make_synthetic({.seed = 5});
  const Image& img = ds.images[0];
  const ProposalSet& props = ds.data.proposals[0].set;
  const auto res = encoders("mock-residual");
  const auto vit = encoders("mock-transformer");
  const EmbeddingVector t = res.text->encode_text("the red box");

  SUBCASE("grad-cam with analytic and finite-difference gradients") {
    const auto fd = make_encoders(KeyValueConfig::parse("kind = mock-residual\nseed = 31\ngradients = finite-difference"));
    const auto a = grad_cam_scores(*res.visual, img, t, props);
    const auto f = grad_cam_scores(*fd.visual, img, t, props);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (props.proposals[i].empty()) continue;
      CHECK(std::isfinite(f[i]));
      CHECK(std::abs(a[i] - f[i]) < 1e-4);
    }
    CHECK_THROWS_AS(grad_cam_scores(*vit.visual, img, t, props), Error);
  }

  SUBCASE("score map: full mask equals the full-map mean") {
    const ProposalSet full{{MaskProposal::full(img.height(), img.width())}};
    const auto map = dense_similarity_map(*dynamic_cast<const ResidualEncoder&>(*res.visual).pooling_weights(),
                                          backbone_features(*res.visual, img), t);
    double mean = 0;
    for (double v : map) mean += v;
    CHECK(std::abs(score_map_scores(*res.visual, img, t, full)[0] - mean / map.size()) < 1e-12);
    try {
      score_map_scores(*vit.visual, img, t, props);
      FAIL("expected SurgeryUnsupported");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kSurgeryUnsupported);
    }
  }

  SUBCASE("region token equals the global path with k = L") {
    const auto s = region_token_scores(*vit.visual, img, t, props);
    VisualContextConfig cfg;
    cfg.masking.k = dynamic_cast<const TransformerEncoder&>(*vit.visual).layer_count();
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props.proposals[i].empty()) {
        CHECK(s[i] == kEmptyProposalScore);
        continue;
      }
      CHECK(std::abs(s[i] - cosine(t, global_visual_feature(*vit.visual, img, props.proposals[i], cfg))) < 1e-9);
    }
    const ProposalSet full{{MaskProposal::full(img.height(), img.width())}};
    CHECK(std::abs(region_token_scores(*vit.visual, img, t, full)[0] -
                   cosine(t, vit.visual->encode_image(img))) < 1e-5);
    CHECK_THROWS_AS(region_token_scores(*res.visual, img, t, props), Error);
  }

  SUBCASE("cropping equals the alpha = 0 pipeline") {
    for (const auto* pair : {&res, &vit}) {
      const auto crop = cropping_scores(*pair->visual, img, t, props);
      CHECK(crop == cropping_scores(*pair->visual, img, t, props));
      const ImageContext ctx(*pair->visual, img, {});
      const auto pipeline = score_with_context(ctx, props, t, 0.0);
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (props.proposals[i].empty()) continue;
        CHECK(std::abs(crop[i] - pipeline[i].score) < 1e-9);
      }
      std::mt19937_64 rng(43);
      const Image square = testing::random_image(rng, 30, 30);
      const ProposalSet full{{MaskProposal::full(30, 30)}};
      CHECK(std::abs(cropping_scores(*pair->visual, square, t, full)[0] -
                     cosine(t, pair->visual->encode_image(square))) < 1e-9);
    }
  }
}

TEST_CASE("baseline names") {
  for (auto k : {BaselineKind::kGradCam, BaselineKind::kScoreMap, BaselineKind::kRegionToken,
                 BaselineKind::kCropping}) {
    CHECK(parse_baseline(baseline_name(k)) == k);
  }
  CHECK_THROWS_AS(parse_baseline("clip-surgery"), Error);
}
