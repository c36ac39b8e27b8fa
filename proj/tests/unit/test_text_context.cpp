#include <map>

#include "doctest.h"
#include "grounding_kit/mock_encoder.hpp"
#include "grounding_kit/text_context.hpp"

using namespace gk;

namespace {

std::map<std::string, ParseTree> appendix_parses() {
  return index_parses(load_parse_file(std::string(GK_DATA_DIR) + "/fixtures/np_appendix.json"));
}

NounPhrase np_of(const std::string& text) {
  static const auto parses = appendix_parses();
  return extract_target_np(parses.at(text), Expression(text));
}

ParseTree tree(std::vector<ParseToken> tokens, std::vector<TokenSpan> chunks) {
  return ParseTree{std::move(tokens), std::move(chunks)};
}

}  // namespace

TEST_CASE("appendix expressions map to their target noun phrases") {
  // Expected spans for the appendix parses fixture.
  const std::vector<std::pair<std::string, std::string>> table = {
      {"mom", "mom"},
      {"little girl", "little girl"},
      {"near zebra", "zebra"},
      {"right sandwich", "sandwich"},
      {"girl's umbrella", "girl's umbrella"},
      {"glass of juice in table", "glass"},
      {"yellow baked squash dish", "yellow baked squash dish"},
      {"left person with elbow bent", "person"},
      {"child sitting on womans lap", "child"},
      {"a cow's ear with a circular tag", "a cow's ear"},
      {"flowered quilt on back of couch", "quilt"},
      {"a mother giraffe licking her baby", "a mother giraffe"},
      {"with bruises! okey, closest ugly couch", "closest ugly couch"},
      {"a black and white dog with pointy ears", "a black and white dog"},
      {"that was it ... man in the center up front", "man"},
      {"the baby boy wearing a red shirt and gray bib", "the baby boy"},
      {"a flat box full of plants labeled wegman's nursery", "a flat box"},
      {"a man's black tie under all the other ties he is wearing", "a man's black tie"},
  };
  for (const auto& [expression, expected] : table) {
    CAPTURE(expression);
    CHECK(np_of(expression).text == expected);
  }
}

TEST_CASE("verb root is replaced by its first noun child") {
  const NounPhrase np = np_of("a cat is lying on the seat of the scooter");
  CHECK(np.text == "a cat");
  CHECK(np.span == TokenSpan{0, 2});
  CHECK(!np.is_whole_sentence);
}

TEST_CASE("whole-sentence fallback") {
  CHECK(np_of("on the left").is_whole_sentence);
  CHECK(np_of("on the left").text == "on the left");
  CHECK(np_of("walking away").is_whole_sentence);
  // A chunk spanning every token is the sentence itself.
  CHECK(np_of("mom").is_whole_sentence);
  CHECK(!np_of("right sandwich").is_whole_sentence);
}

TEST_CASE("noun phrase text is sliced from the original spacing") {
  const ParseTree p = tree({{0, "big", "ADJ", 1, "amod"}, {1, "dog", "NOUN", 1, "ROOT"},
                            {2, "here", "ADV", 1, "advmod"}},
                           {{0, 2}});
  CHECK(extract_target_np(p, Expression("big   dog here")).text == "big   dog");
}

TEST_CASE("malformed parses are rejected") {
  auto code = [](const ParseTree& p) {
    try {
      p.validate();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  const ParseTree no_root = tree({{0, "a", "DET", 1, "det"}, {1, "b", "NOUN", 0, "nsubj"}}, {});
  CHECK(code(no_root) == ErrorCode::kMalformedParse);
  const ParseTree two_roots = tree({{0, "a", "NOUN", 0, "ROOT"}, {1, "b", "NOUN", 1, "ROOT"}}, {});
  CHECK(code(two_roots) == ErrorCode::kMalformedParse);
  const ParseTree cycle = tree({{0, "a", "NOUN", 0, "ROOT"}, {1, "b", "ADJ", 2, "amod"},
                                {2, "c", "ADJ", 1, "amod"}},
                               {});
  CHECK(code(cycle) == ErrorCode::kMalformedParse);
  const ParseTree bad_head = tree({{0, "a", "NOUN", 5, "ROOT"}}, {});
  CHECK(code(bad_head) == ErrorCode::kMalformedParse);
  const ParseTree bad_chunk = tree({{0, "a", "NOUN", 0, "ROOT"}}, {{0, 3}});
  CHECK(code(bad_chunk) == ErrorCode::kMalformedParse);
  CHECK_THROWS_AS(extract_target_np(cycle, Expression("a b c")), Error);
}

TEST_CASE("parse trees round-trip through JSON") {
  for (const auto& [text, parse] : appendix_parses()) {
    const ParseTree back = parse_tree_from_json(parse_tree_to_json(parse));
    REQUIRE(back.tokens.size() == parse.tokens.size());
    for (std::size_t i = 0; i < back.tokens.size(); ++i) {
      CHECK(back.tokens[i].text == parse.tokens[i].text);
      CHECK(back.tokens[i].head == parse.tokens[i].head);
      CHECK(back.tokens[i].pos == parse.tokens[i].pos);
    }
    CHECK(back.chunks == parse.chunks);
  }
}

TEST_CASE("text features") {
  const MockTextEncoder enc(16, 77, 3);
  const Expression e("right sandwich");
  const auto parses = appendix_parses();
  const auto& p = parses.at("right sandwich");
  CHECK(global_text_feature(enc, e) == global_text_feature(enc, e));
  CHECK(!(global_text_feature(enc, e) == global_text_feature(enc, Expression("left sandwich"))));

  const NounPhrase np = extract_target_np(p, e);
  CHECK(local_text_feature(enc, np) == enc.encode_text("sandwich"));
  const NounPhrase whole{"right sandwich", {0, 2}, true};
  CHECK(local_text_feature(enc, whole) == global_text_feature(enc, e));

  const auto half = global_local_text_feature(enc, e, p, 0.5);
  CHECK(half.fused == fuse(half.global, half.local, 0.5));
  CHECK(global_local_text_feature(enc, e, p, 1.0).fused == global_text_feature(enc, e));

  const Expression mom("mom");
  for (int i = 0; i <= 10; ++i) {
    const auto f = global_local_text_feature(enc, mom, parses.at("mom"), i / 10.0);
    CHECK(f.fused == global_text_feature(enc, mom));
  }
}
