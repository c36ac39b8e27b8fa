#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "grounding_kit/mock_encoder.hpp"
#include "grounding_kit/scoring.hpp"
#include "synthetic.hpp"

using namespace gk;

namespace {

int argmax_oracle(const std::vector<double>& s) {
  int best = -1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::isinf(s[i]) && s[i] < 0) continue;
    if (best < 0 || s[i] > s[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
  }
  return best;
}

ParseTree single_noun(const std::string& word) {
  return ParseTree{{{0, word, "NOUN", 0, "ROOT"}}, {{0, 1}}};
}

}  // namespace

TEST_CASE("select_mask") {
  CHECK(select_mask(to_scored({0.3, 0.7})).proposal_index == 1);
  CHECK(select_mask(to_scored({0.5, 0.5})).proposal_index == 0);
  CHECK(select_mask(to_scored({-0.9})).proposal_index == 0);
  CHECK(select_mask(to_scored({kEmptyProposalScore, -0.2})).proposal_index == 1);
  try {
    select_mask(to_scored({kEmptyProposalScore, kEmptyProposalScore}));
    FAIL("expected SelectionImpossible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSelectionImpossible);
  }
  CHECK_THROWS_AS(select_mask({}), Error);

  std::mt19937_64 rng(30);
  std::uniform_int_distribution<int> len(1, 12), level(-3, 3);
  for (int i = 0; i < 20; ++i) {
    std::vector<double> s(static_cast<std::size_t>(len(rng)));
    for (auto& v : s) v = level(rng) / 3.0;  // coarse levels force ties
    CHECK(select_mask(to_scored(s)).proposal_index == argmax_oracle(s));
  }
}

TEST_CASE("score_proposals scores each proposal independently") {
  const auto ds = testing::make_synthetic({});
  const auto pair = make_encoders(KeyValueConfig::parse("kind = mock-transformer\nseed = 2"));
  const Image& img = ds.images[0];
  const ProposalSet& props = ds.data.proposals[0].set;
  const Expression e("box");
  const FusionWeights w{0.95, 0.5};
  const auto scored = score_proposals(*pair.visual, *pair.text, img, props, e, single_noun("box"), w, {});
  REQUIRE(scored.size() == props.size());
  const EmbeddingVector t = global_local_text_feature(*pair.text, e, single_noun("box"), 0.5).fused;
  for (std::size_t i = 0; i < props.size(); ++i) {
    CHECK(scored[i].proposal_index == static_cast<int>(i));
    if (props.proposals[i].empty()) {
      CHECK(scored[i].empty_proposal);
      CHECK(scored[i].score == kEmptyProposalScore);
      continue;
    }
    const auto f = global_local_visual_feature(*pair.visual, img, props.proposals[i], 0.95, {});
    CHECK(std::abs(scored[i].score - cosine(t, f.fused)) < 1e-12);
  }
}

TEST_CASE("scores follow proposal permutations and ignore text scale") {
  const auto ds = testing::make_synthetic({.seed = 3});
  const auto pair = make_encoders(KeyValueConfig::parse("kind = mock-residual"));
  const Image& img = ds.images[1];
  ProposalSet props = ds.data.proposals[1].set;
  const ImageContext ctx(*pair.visual, img, {});
  const EmbeddingVector t = pair.text->encode_text("a blue cup");
  const auto base = score_with_context(ctx, props, t, 0.9);
  const auto scaled = score_with_context(ctx, props, t.scaled(7.5), 0.9);
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (base[i].empty_proposal) continue;
    CHECK(std::abs(base[i].score - scaled[i].score) < 1e-12);
  }
  ProposalSet reversed = props;
  std::reverse(reversed.proposals.begin(), reversed.proposals.end());
  const auto rev = score_with_context(ctx, reversed, t, 0.9);
  for (std::size_t i = 0; i < base.size(); ++i) {
    CHECK(rev[base.size() - 1 - i].score == base[i].score);
  }
}

TEST_CASE("threaded scoring is identical to serial scoring") {
  const auto ds = testing::make_synthetic({.seed = 4});
  const auto pair = make_encoders(KeyValueConfig::parse("kind = mock-transformer"));
  const ImageContext ctx(*pair.visual, ds.images[0], {});
  const EmbeddingVector t = pair.text->encode_text("the green ball");
  const auto serial = score_with_context(ctx, ds.data.proposals[0].set, t, 0.95, 1);
  const auto parallel = score_with_context(ctx, ds.data.proposals[0].set, t, 0.95, 4);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].score == parallel[i].score);
  CHECK(effective_threads(8, false) == 1);
  CHECK(effective_threads(8, true) == 8);
  CHECK(effective_threads(0, true) == 1);
}

TEST_CASE("proposal sets are validated against the image") {
  ProposalSet empty;
  CHECK_THROWS_AS(empty.validate(4, 4), Error);
  ProposalSet wrong{{MaskProposal::full(3, 4)}};
  try {
    wrong.validate(4, 4);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kShapeMismatch);
  }
}
