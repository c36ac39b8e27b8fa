#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "grounding_kit/core.hpp"
#include "grounding_kit/scoring.hpp"

namespace gk {

// Uncompressed column-major run-length encoding. Runs alternate starting
// with background; the first count may be 0.
struct RleMask {
  int height = 0;
  int width = 0;
  std::vector<std::uint64_t> counts;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

RleMask rle_encode(const MaskProposal& mask);
/// Throws MalformedRle when the counts do not sum to height * width.
MaskProposal rle_decode(const RleMask& rle, MaskSource source = MaskSource::kProposal);

nlohmann::json rle_to_json(const RleMask& rle);
RleMask rle_from_json(const nlohmann::json& j, const std::string& where);

struct ProposalImage {
  std::string id;
  int height = 0;
  int width = 0;
  ProposalSet set;
};

struct EvalRecord {
  std::string image_id;
  std::string image_path;  // as written; relative paths resolve against the records file
  std::string expression;
  RleMask gt;
  std::optional<std::string> object_class;
};

struct InstanceMask {
  std::string object_class;
  RleMask mask;
};

struct InstanceImage {
  std::string id;
  int height = 0;
  int width = 0;
  std::vector<InstanceMask> instances;
};

// {"images":[{"id":str,"height":int,"width":int,"proposals":[{"size":[H,W],"counts":[...]}]}]}
std::vector<ProposalImage> load_proposals(const std::filesystem::path& path);
std::vector<ProposalImage> proposals_from_json(const nlohmann::json& doc, const std::string& origin);
nlohmann::json proposals_to_json(const std::vector<ProposalImage>& images);
void save_proposals(const std::filesystem::path& path, const std::vector<ProposalImage>& images);

// {"records":[{"image_id":str,"image_path":str,"expression":str,"gt":{RLE},"class":str|null}]}
std::vector<EvalRecord> load_records(const std::filesystem::path& path);
std::vector<EvalRecord> records_from_json(const nlohmann::json& doc, const std::string& origin);
nlohmann::json records_to_json(const std::vector<EvalRecord>& records);
void save_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records);

// Full per-image ground-truth inventory with classes, for mask-class diagnostics.
// {"images":[{"id":str,"height":int,"width":int,"instances":[{"class":str,"size":[H,W],"counts":[...]}]}]}
std::vector<InstanceImage> load_instances(const std::filesystem::path& path);
nlohmann::json instances_to_json(const std::vector<InstanceImage>& images);

std::map<std::string, const ProposalImage*> index_by_id(const std::vector<ProposalImage>& images);

std::filesystem::path resolve_against(const std::filesystem::path& base_file,
                                      const std::string& path);

}  // namespace gk
