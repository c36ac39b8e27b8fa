#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "grounding_kit/core.hpp"
#include "grounding_kit/encoder.hpp"

namespace gk {

struct ParseToken {
  int index = 0;
  std::string text;
  std::string pos;  // coarse tag: NOUN, VERB, ...
  int head = 0;     // equals `index` for the root
  std::string dep;
};

struct TokenSpan {
  int begin = 0;
  int end = 0;  // exclusive
  bool contains(int i) const { return i >= begin && i < end; }
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

// Dependency parse of one expression, produced by an external parser.
struct ParseTree {
  std::vector<ParseToken> tokens;
  std::vector<TokenSpan> chunks;  // noun chunks

  /// Throws MalformedParse on bad indices, missing/multiple roots, cycles,
  /// or overlapping chunks.
  void validate() const;
  int root() const;
};

struct NounPhrase {
  std::string text;
  TokenSpan span;
  bool is_whole_sentence = false;
};

bool is_noun_tag(const std::string& pos);
bool is_verb_tag(const std::string& pos);

/// Noun chunk containing the dependency root. A verb root is first replaced
/// by its first noun child in sentence order. Falls back to the whole sentence.
NounPhrase extract_target_np(const ParseTree& parse, const Expression& original);

EmbeddingVector global_text_feature(const TextEncoder& encoder, const Expression& expression);
EmbeddingVector local_text_feature(const TextEncoder& encoder, const NounPhrase& np);

struct TextFeatures {
  EmbeddingVector fused;
  EmbeddingVector global;
  EmbeddingVector local;
  NounPhrase np;
};

TextFeatures global_local_text_feature(const TextEncoder& encoder, const Expression& expression,
                                       const ParseTree& parse, double beta);

// JSON: {"tokens":[{"i":int,"text":str,"pos":str,"head":int,"dep":str}],
//        "chunks":[[start,end]]}
ParseTree parse_tree_from_json(const nlohmann::json& j);
nlohmann::json parse_tree_to_json(const ParseTree& parse);

struct ParseEntry {
  std::string id;
  std::string expression;
  ParseTree parse;
};

// Parse file: {"parses":[{"id":str?,"expression":str,"tokens":[...],"chunks":[...]}]}
std::vector<ParseEntry> load_parse_file(const std::filesystem::path& path);
void save_parse_file(const std::filesystem::path& path, const std::vector<ParseEntry>& entries);

/// Expression text -> parse; the first entry for a text wins.
std::map<std::string, ParseTree> index_parses(const std::vector<ParseEntry>& entries);

}  // namespace gk
