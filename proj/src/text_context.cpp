#include "grounding_kit/text_context.hpp"

#include <algorithm>

#include "grounding_kit/atomic_file.hpp"

namespace gk {

using nlohmann::json;

bool is_noun_tag(const std::string& pos) { return pos == "NOUN" || pos == "PROPN"; }
bool is_verb_tag(const std::string& pos) { return pos == "VERB" || pos == "AUX"; }

void ParseTree::validate() const {
  const int n = static_cast<int>(tokens.size());
  if (n == 0) fail(ErrorCode::kMalformedParse, "parse has no tokens");
  int roots = 0;
  for (int i = 0; i < n; ++i) {
    const ParseToken& t = tokens[static_cast<std::size_t>(i)];
    if (t.index != i) {
      fail(ErrorCode::kMalformedParse, "token " + std::to_string(i) + " carries index " +
                                           std::to_string(t.index));
    }
    if (t.head < 0 || t.head >= n) {
      fail(ErrorCode::kMalformedParse, "token " + std::to_string(i) + " has head " +
                                           std::to_string(t.head) + " outside the sentence");
    }
    if (t.head == i) ++roots;
  }
  if (roots != 1) {
    fail(ErrorCode::kMalformedParse, "parse must have exactly one root, found " +
                                         std::to_string(roots));
  }
  for (int i = 0; i < n; ++i) {
    int cur = i;
    int steps = 0;
    while (tokens[static_cast<std::size_t>(cur)].head != cur) {
      cur = tokens[static_cast<std::size_t>(cur)].head;
      if (++steps > n) {
        fail(ErrorCode::kMalformedParse, "cyclic head links from token " + std::to_string(i));
      }
    }
  }
  std::vector<TokenSpan> sorted = chunks;
  std::sort(sorted.begin(), sorted.end(),
            [](const TokenSpan& a, const TokenSpan& b) { return a.begin < b.begin; });
  for (std::size_t c = 0; c < sorted.size(); ++c) {
    const TokenSpan& s = sorted[c];
    if (s.begin < 0 || s.end > n || s.end <= s.begin) {
      fail(ErrorCode::kMalformedParse, "chunk [" + std::to_string(s.begin) + ", " +
                                           std::to_string(s.end) + ") out of bounds");
    }
    if (c > 0 && sorted[c - 1].end > s.begin) {
      fail(ErrorCode::kMalformedParse, "noun chunks overlap");
    }
  }
}

int ParseTree::root() const {
  for (const ParseToken& t : tokens) {
    if (t.head == t.index) return t.index;
  }
  fail(ErrorCode::kMalformedParse, "parse has no root");
}

NounPhrase extract_target_np(const ParseTree& parse, const Expression& original) {
  parse.validate();
  const std::string& text = original.text();
  const int n = static_cast<int>(parse.tokens.size());

  // Character extent of each token within the original expression.
  std::vector<std::size_t> starts(static_cast<std::size_t>(n)), ends(static_cast<std::size_t>(n));
  std::size_t cursor = 0;
  for (int i = 0; i < n; ++i) {
    const std::string& tok = parse.tokens[static_cast<std::size_t>(i)].text;
    const std::size_t at = text.find(tok, cursor);
    if (tok.empty() || at == std::string::npos) {
      fail(ErrorCode::kMalformedParse,
           "token '" + tok + "' not found in expression \"" + text + "\"");
    }
    starts[static_cast<std::size_t>(i)] = at;
    ends[static_cast<std::size_t>(i)] = at + tok.size();
    cursor = at + tok.size();
  }

  int target = parse.root();
  if (is_verb_tag(parse.tokens[static_cast<std::size_t>(target)].pos)) {
    for (const ParseToken& t : parse.tokens) {
      if (t.index != target && t.head == target && is_noun_tag(t.pos)) {
        target = t.index;
        break;
      }
    }
  }

  const NounPhrase whole{text, TokenSpan{0, n}, true};
  for (const TokenSpan& chunk : parse.chunks) {
    if (!chunk.contains(target)) continue;
    if (chunk.begin == 0 && chunk.end == n) return whole;
    const std::size_t b = starts[static_cast<std::size_t>(chunk.begin)];
    const std::size_t e = ends[static_cast<std::size_t>(chunk.end - 1)];
    return NounPhrase{text.substr(b, e - b), chunk, false};
  }
  return whole;
}

EmbeddingVector global_text_feature(const TextEncoder& encoder, const Expression& expression) {
  return encoder.encode_text(expression.text());
}

EmbeddingVector local_text_feature(const TextEncoder& encoder, const NounPhrase& np) {
  if (np.text.find_first_not_of(" \t\r\n") == std::string::npos) {
    fail(ErrorCode::kInvalidArgument, "noun phrase is empty");
  }
  return encoder.encode_text(np.text);
}

TextFeatures global_local_text_feature(const TextEncoder& encoder, const Expression& expression,
                                       const ParseTree& parse, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) fail(ErrorCode::kWeightOutOfRange, "beta outside [0, 1]");
  NounPhrase np = extract_target_np(parse, expression);
  EmbeddingVector global = global_text_feature(encoder, expression);
  EmbeddingVector local = np.is_whole_sentence ? global : local_text_feature(encoder, np);
  EmbeddingVector fused = np.is_whole_sentence ? global : fuse(global, local, beta);
  return {std::move(fused), std::move(global), std::move(local), std::move(np)};
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) {
    fail(ErrorCode::kSchemaError, where + ": missing key '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(ErrorCode::kSchemaError, where + ": key '" + key + "' has the wrong type");
  }
}

}  // namespace

ParseTree parse_tree_from_json(const json& j) {
  ParseTree tree;
  if (!j.is_object() || !j.contains("tokens") || !j.at("tokens").is_array()) {
    fail(ErrorCode::kSchemaError, "parse tree: 'tokens' must be an array");
  }
  std::size_t idx = 0;
  for (const json& tj : j.at("tokens")) {
    const std::string where = "parse tree token " + std::to_string(idx++);
    tree.tokens.push_back(ParseToken{required<int>(tj, "i", where),
                                     required<std::string>(tj, "text", where),
                                     required<std::string>(tj, "pos", where),
                                     required<int>(tj, "head", where),
                                     required<std::string>(tj, "dep", where)});
  }
  if (j.contains("chunks")) {
    if (!j.at("chunks").is_array()) fail(ErrorCode::kSchemaError, "parse tree: bad 'chunks'");
    for (const json& cj : j.at("chunks")) {
      if (!cj.is_array() || cj.size() != 2 || !cj[0].is_number_integer() ||
          !cj[1].is_number_integer()) {
        fail(ErrorCode::kSchemaError, "parse tree: each chunk must be [start, end]");
      }
      tree.chunks.push_back(TokenSpan{cj[0].get<int>(), cj[1].get<int>()});
    }
  }
  return tree;
}

json parse_tree_to_json(const ParseTree& parse) {
  json tokens = json::array();
  for (const ParseToken& t : parse.tokens) {
    tokens.push_back({{"i", t.index}, {"text", t.text}, {"pos", t.pos}, {"head", t.head},
                      {"dep", t.dep}});
  }
  json chunks = json::array();
  for (const TokenSpan& s : parse.chunks) chunks.push_back({s.begin, s.end});
  return {{"tokens", tokens}, {"chunks", chunks}};
}

std::vector<ParseEntry> load_parse_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kSchemaError, "parse file not found: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchemaError, path.string() + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("parses") || !doc.at("parses").is_array()) {
    fail(ErrorCode::kSchemaError, path.string() + ": top-level key 'parses' must be an array");
  }
  std::vector<ParseEntry> entries;
  std::size_t idx = 0;
  for (const json& pj : doc.at("parses")) {
    const std::string where = path.string() + ": parses[" + std::to_string(idx) + "]";
    ParseEntry entry;
    entry.expression = required<std::string>(pj, "expression", where);
    entry.id = pj.contains("id") && pj.at("id").is_string() ? pj.at("id").get<std::string>()
                                                           : std::to_string(idx);
    try {
      entry.parse = parse_tree_from_json(pj);
    } catch (const Error& e) {
      fail(e.code(), where + ": " + e.what());
    }
    entries.push_back(std::move(entry));
    ++idx;
  }
  return entries;
}

void save_parse_file(const std::filesystem::path& path, const std::vector<ParseEntry>& entries) {
  json parses = json::array();
  for (const ParseEntry& e : entries) {
    json pj = parse_tree_to_json(e.parse);
    pj["id"] = e.id;
    pj["expression"] = e.expression;
    parses.push_back(std::move(pj));
  }
  write_file_atomically(path, json{{"parses", parses}}.dump(2) + "\n");
}

std::map<std::string, ParseTree> index_parses(const std::vector<ParseEntry>& entries) {
  std::map<std::string, ParseTree> out;
  for (const ParseEntry& e : entries) out.emplace(e.expression, e.parse);
  return out;
}

}  // namespace gk
