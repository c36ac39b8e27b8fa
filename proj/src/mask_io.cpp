#include "grounding_kit/mask_io.hpp"

#include "grounding_kit/atomic_file.hpp"

namespace gk {

using nlohmann::json;

RleMask rle_encode(const MaskProposal& mask) {
  RleMask rle{mask.height(), mask.width(), {}};
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (int x = 0; x < mask.width(); ++x) {
    for (int y = 0; y < mask.height(); ++y) {
      const std::uint8_t bit = mask.at(y, x) ? 1 : 0;
      if (bit != current) {
        rle.counts.push_back(run);
        run = 0;
        current = bit;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

MaskProposal rle_decode(const RleMask& rle, MaskSource source) {
  if (rle.height < 1 || rle.width < 1) {
    fail(ErrorCode::kMalformedRle, "RLE size must be positive");
  }
  const std::uint64_t total = static_cast<std::uint64_t>(rle.height) * rle.width;
  std::uint64_t sum = 0;
  for (std::uint64_t c : rle.counts) {
    sum += c;
    if (sum > total) break;
  }
  if (sum != total) {
    fail(ErrorCode::kMalformedRle, "RLE counts sum to " + std::to_string(sum) + ", expected " +
                                       std::to_string(total));
  }
  MaskProposal mask(rle.height, rle.width, source);
  std::uint64_t pos = 0;
  std::uint8_t value = 0;
  for (std::uint64_t c : rle.counts) {
    if (value) {
      for (std::uint64_t k = pos; k < pos + c; ++k) {
        mask.set(static_cast<int>(k % static_cast<std::uint64_t>(rle.height)),
                 static_cast<int>(k / static_cast<std::uint64_t>(rle.height)), true);
      }
    }
    pos += c;
    value ^= 1;
  }
  return mask;
}

json rle_to_json(const RleMask& rle) {
  return {{"size", {rle.height, rle.width}}, {"counts", rle.counts}};
}

namespace {

[[noreturn]] void schema(const std::string& where, const std::string& what) {
  fail(ErrorCode::kSchemaError, where + ": " + what);
}

const json& field(const json& j, const char* key, const std::string& where) {
  if (!j.is_object()) schema(where, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema(where, std::string("missing key '") + key + "'");
  return *it;
}

std::string string_field(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_string()) schema(where, std::string("key '") + key + "' must be a string");
  return v.get<std::string>();
}

int int_field(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_number_integer()) schema(where, std::string("key '") + key + "' must be an integer");
  return v.get<int>();
}

const json& array_field(const json& j, const char* key, const std::string& where) {
  const json& v = field(j, key, where);
  if (!v.is_array()) schema(where, std::string("key '") + key + "' must be an array");
  return v;
}

json parse_json_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail(ErrorCode::kSchemaError, "file not found: " + path.string());
  }
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kSchemaError, path.string() + ": " + e.what());
  }
}

}  // namespace

RleMask rle_from_json(const json& j, const std::string& where) {
  const json& size = array_field(j, "size", where);
  if (size.size() != 2 || !size[0].is_number_integer() || !size[1].is_number_integer()) {
    schema(where, "'size' must be [H, W]");
  }
  RleMask rle{size[0].get<int>(), size[1].get<int>(), {}};
  for (const json& c : array_field(j, "counts", where)) {
    if (!c.is_number_integer() || c.get<long long>() < 0) {
      schema(where, "'counts' must hold non-negative integers");
    }
    rle.counts.push_back(c.get<std::uint64_t>());
  }
  return rle;
}

std::vector<ProposalImage> proposals_from_json(const json& doc, const std::string& origin) {
  std::vector<ProposalImage> images;
  const json& arr = array_field(doc, "images", origin);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = origin + ": images[" + std::to_string(i) + "]";
    ProposalImage img;
    img.id = string_field(arr[i], "id", where);
    img.height = int_field(arr[i], "height", where);
    img.width = int_field(arr[i], "width", where);
    const json& props = array_field(arr[i], "proposals", where);
    for (std::size_t p = 0; p < props.size(); ++p) {
      const std::string pwhere = where + ".proposals[" + std::to_string(p) + "]";
      const RleMask rle = rle_from_json(props[p], pwhere);
      if (rle.height != img.height || rle.width != img.width) {
        fail(ErrorCode::kShapeMismatch, pwhere + ": size " + std::to_string(rle.height) + "x" +
                                            std::to_string(rle.width) + " differs from image " +
                                            std::to_string(img.height) + "x" +
                                            std::to_string(img.width));
      }
      try {
        img.set.proposals.push_back(rle_decode(rle));
      } catch (const Error& e) {
        fail(e.code(), pwhere + " (proposal " + std::to_string(p) + "): " + e.what());
      }
    }
    images.push_back(std::move(img));
  }
  return images;
}

std::vector<ProposalImage> load_proposals(const std::filesystem::path& path) {
  return proposals_from_json(parse_json_file(path), path.string());
}

json proposals_to_json(const std::vector<ProposalImage>& images) {
  json arr = json::array();
  for (const ProposalImage& img : images) {
    json props = json::array();
    for (const MaskProposal& m : img.set.proposals) props.push_back(rle_to_json(rle_encode(m)));
    arr.push_back(
        {{"id", img.id}, {"height", img.height}, {"width", img.width}, {"proposals", props}});
  }
  return {{"images", arr}};
}

void save_proposals(const std::filesystem::path& path, const std::vector<ProposalImage>& images) {
  write_file_atomically(path, proposals_to_json(images).dump() + "\n");
}

std::vector<EvalRecord> records_from_json(const json& doc, const std::string& origin) {
  std::vector<EvalRecord> records;
  const json& arr = array_field(doc, "records", origin);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = origin + ": records[" + std::to_string(i) + "]";
    EvalRecord rec;
    rec.image_id = string_field(arr[i], "image_id", where);
    rec.image_path = string_field(arr[i], "image_path", where);
    rec.expression = string_field(arr[i], "expression", where);
    if (rec.expression.find_first_not_of(" \t\r\n") == std::string::npos) {
      schema(where, "expression is empty");
    }
    rec.gt = rle_from_json(field(arr[i], "gt", where), where + ".gt");
    try {
      (void)rle_decode(rec.gt);
    } catch (const Error& e) {
      fail(e.code(), where + ".gt: " + e.what());
    }
    if (arr[i].contains("class") && !arr[i].at("class").is_null()) {
      if (!arr[i].at("class").is_string()) schema(where, "'class' must be a string or null");
      rec.object_class = arr[i].at("class").get<std::string>();
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<EvalRecord> load_records(const std::filesystem::path& path) {
  return records_from_json(parse_json_file(path), path.string());
}

json records_to_json(const std::vector<EvalRecord>& records) {
  json arr = json::array();
  for (const EvalRecord& r : records) {
    arr.push_back({{"image_id", r.image_id},
                   {"image_path", r.image_path},
                   {"expression", r.expression},
                   {"gt", rle_to_json(r.gt)},
                   {"class", r.object_class ? json(*r.object_class) : json(nullptr)}});
  }
  return {{"records", arr}};
}

void save_records(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
  write_file_atomically(path, records_to_json(records).dump() + "\n");
}

std::vector<InstanceImage> load_instances(const std::filesystem::path& path) {
  const json doc = parse_json_file(path);
  std::vector<InstanceImage> images;
  const json& arr = array_field(doc, "images", path.string());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = path.string() + ": images[" + std::to_string(i) + "]";
    InstanceImage img;
    img.id = string_field(arr[i], "id", where);
    img.height = int_field(arr[i], "height", where);
    img.width = int_field(arr[i], "width", where);
    const json& inst = array_field(arr[i], "instances", where);
    for (std::size_t k = 0; k < inst.size(); ++k) {
      const std::string iwhere = where + ".instances[" + std::to_string(k) + "]";
      InstanceMask m{string_field(inst[k], "class", iwhere), rle_from_json(inst[k], iwhere)};
      if (m.mask.height != img.height || m.mask.width != img.width) {
        fail(ErrorCode::kShapeMismatch, iwhere + ": size differs from the image");
      }
      (void)rle_decode(m.mask);
      img.instances.push_back(std::move(m));
    }
    images.push_back(std::move(img));
  }
  return images;
}

json instances_to_json(const std::vector<InstanceImage>& images) {
  json arr = json::array();
  for (const InstanceImage& img : images) {
    json inst = json::array();
    for (const InstanceMask& m : img.instances) {
      json j = rle_to_json(m.mask);
      j["class"] = m.object_class;
      inst.push_back(std::move(j));
    }
    arr.push_back(
        {{"id", img.id}, {"height", img.height}, {"width", img.width}, {"instances", inst}});
  }
  return {{"images", arr}};
}

std::map<std::string, const ProposalImage*> index_by_id(const std::vector<ProposalImage>& images) {
  std::map<std::string, const ProposalImage*> out;
  for (const ProposalImage& img : images) {
    if (!out.emplace(img.id, &img).second) {
      fail(ErrorCode::kSchemaError, "duplicate image id '" + img.id + "' in proposals");
    }
  }
  return out;
}

std::filesystem::path resolve_against(const std::filesystem::path& base_file,
                                      const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = base_file.parent_path() / p;
  return p;
}

}  // namespace gk
