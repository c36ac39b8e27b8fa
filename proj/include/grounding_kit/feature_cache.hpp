#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "grounding_kit/core.hpp"
#include "grounding_kit/visual_context.hpp"

namespace gk {

inline constexpr const char* kCacheEnvVar = "GROUNDING_KIT_CACHE";

// On-disk cache of per-image boundary features (the residual backbone grid,
// or the transformer token state at the masking boundary). Entries are keyed
// by encoder fingerprint, boundary depth and image content.
class FeatureCache {
 public:
  explicit FeatureCache(std::filesystem::path dir);
  /// Cache rooted at $GROUNDING_KIT_CACHE, or nullopt when unset/empty.
  static std::optional<FeatureCache> from_env();

  struct Entry {
    FeatureGrid grid;
    std::optional<std::vector<double>> cls;
  };

  std::string key(const VisualEncoder& encoder, const Image& img, int k) const;
  std::optional<Entry> load(const std::string& key) const;
  void store(const std::string& key, const Entry& entry) const;

  /// Builds an ImageContext, reusing a cached boundary state when present.
  ImageContext context(const VisualEncoder& encoder, const Image& img,
                       const VisualContextConfig& cfg) const;

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
};

}  // namespace gk
