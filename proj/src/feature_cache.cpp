#include "grounding_kit/feature_cache.hpp"

#include <cstdlib>
#include <cstring>
#include <iomanip>
#include <sstream>

#include "grounding_kit/atomic_file.hpp"
#include "grounding_kit/log.hpp"

namespace gk {

namespace {

constexpr char kMagic[8] = {'G', 'K', 'F', 'C', '0', '0', '0', '1'};

template <typename T>
void put(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool take(std::string_view& in, T& value) {
  if (in.size() < sizeof(T)) return false;
  std::memcpy(&value, in.data(), sizeof(T));
  in.remove_prefix(sizeof(T));
  return true;
}

}  // namespace

FeatureCache::FeatureCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<FeatureCache> FeatureCache::from_env() {
  const char* dir = std::getenv(kCacheEnvVar);
  if (!dir || !*dir) return std::nullopt;
  return FeatureCache(dir);
}

std::string FeatureCache::key(const VisualEncoder& encoder, const Image& img, int k) const {
  const bool transformer = encoder.info().kind == EncoderKind::kPatchTransformer;
  std::string header = encoder.fingerprint() + "|k" + std::to_string(transformer ? k : 0) + "|" +
                       std::to_string(img.height()) + "x" + std::to_string(img.width());
  const auto bytes = img.data();
  const std::uint64_t h = fnv1a64(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
      fnv1a64(header));
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

std::optional<FeatureCache::Entry> FeatureCache::load(const std::string& key) const {
  const auto path = dir_ / (key + ".gkfc");
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::string blob;
  try {
    blob = read_file(path);
  } catch (const Error&) {
    return std::nullopt;
  }
  std::string_view in(blob);
  if (in.size() < sizeof(kMagic) || std::memcmp(in.data(), kMagic, sizeof(kMagic)) != 0) {
    warn("ignoring corrupt cache entry " + path.string());
    return std::nullopt;
  }
  in.remove_prefix(sizeof(kMagic));
  std::int32_t channels = 0, rows = 0, cols = 0, has_cls = 0;
  if (!take(in, channels) || !take(in, rows) || !take(in, cols) || !take(in, has_cls) ||
      channels < 1 || rows < 1 || cols < 1) {
    warn("ignoring corrupt cache entry " + path.string());
    return std::nullopt;
  }
  const std::size_t n = static_cast<std::size_t>(channels) * rows * cols;
  const std::size_t need = (n + (has_cls ? static_cast<std::size_t>(channels) : 0)) * sizeof(double);
  if (in.size() != need) {
    warn("ignoring truncated cache entry " + path.string());
    return std::nullopt;
  }
  std::vector<double> values(n);
  std::memcpy(values.data(), in.data(), n * sizeof(double));
  in.remove_prefix(n * sizeof(double));
  Entry entry{FeatureGrid(channels, GridShape{rows, cols}, std::move(values)), std::nullopt};
  if (has_cls) {
    std::vector<double> cls(static_cast<std::size_t>(channels));
    std::memcpy(cls.data(), in.data(), cls.size() * sizeof(double));
    entry.cls = std::move(cls);
  }
  return entry;
}

void FeatureCache::store(const std::string& key, const Entry& entry) const {
  std::string blob(kMagic, sizeof(kMagic));
  put(blob, static_cast<std::int32_t>(entry.grid.channels()));
  put(blob, static_cast<std::int32_t>(entry.grid.shape().rows));
  put(blob, static_cast<std::int32_t>(entry.grid.shape().cols));
  put(blob, static_cast<std::int32_t>(entry.cls ? 1 : 0));
  const auto values = entry.grid.values();
  blob.append(reinterpret_cast<const char*>(values.data()), values.size() * sizeof(double));
  if (entry.cls) {
    blob.append(reinterpret_cast<const char*>(entry.cls->data()),
                entry.cls->size() * sizeof(double));
  }
  write_file_atomically(dir_ / (key + ".gkfc"), blob);
}

ImageContext FeatureCache::context(const VisualEncoder& encoder, const Image& img,
                                   const VisualContextConfig& cfg) const {
  const std::string k = key(encoder, img, cfg.masking.k);
  if (auto hit = load(k)) {
    try {
      return ImageContext(encoder, img, cfg, std::move(hit->grid), std::move(hit->cls));
    } catch (const Error&) {
      warn("cache entry " + k + " does not match the encoder; recomputing");
    }
  }
  ImageContext ctx(encoder, img, cfg);
  Entry entry{ctx.boundary_grid(), std::nullopt};
  if (const auto* cls = ctx.boundary_cls()) entry.cls = *cls;
  try {
    store(k, entry);
  } catch (const Error& e) {
    warn(std::string("feature cache write failed: ") + e.what());
  }
  return ctx;
}

}  // namespace gk
