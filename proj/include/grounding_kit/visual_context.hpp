#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "grounding_kit/core.hpp"
#include "grounding_kit/encoder.hpp"

namespace gk {

struct TokenMaskingConfig {
  int k = 3;  // number of final transformer layers that see masked tokens
  bool reapply_per_layer = true;
};

/// How the pooling query is formed from a masked backbone grid.
enum class QueryMode {
  kInMaskMean,    // mean over in-mask cells only
  kFullGridMean,  // mean over the whole (zeroed) grid
};

struct VisualContextConfig {
  TokenMaskingConfig masking;
  QueryMode query_mode = QueryMode::kInMaskMean;
};

struct BoundingBox {
  int row0 = 0, col0 = 0, row1 = 0, col1 = 0;  // half-open
  int height() const { return row1 - row0; }
  int width() const { return col1 - col0; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct CropSpec {
  BoundingBox bbox;
  bool pad_to_square = true;
  std::uint8_t fill_value = 0;
};

/// Cell is set iff any mask pixel falling in it is set.
GridMask resize_mask_to_grid(const MaskProposal& mask, GridShape grid);

/// Tight bounding box of the foreground. Throws EmptyMask.
BoundingBox mask_bbox(const MaskProposal& mask);
CropSpec crop_spec_for(const MaskProposal& mask);

/// Zeroes background, cuts the tight bbox, pads to a centered square.
Image crop_to_mask(const Image& img, const MaskProposal& mask);
Image apply_crop(const Image& img, const MaskProposal& mask, const CropSpec& spec);

/// Attention pooling over a backbone grid with out-of-mask cells zeroed
/// before query, key and value are formed.
EmbeddingVector masked_attention_pool(const AttentionPoolWeights& weights, const FeatureGrid& grid,
                                      const GridMask& mask, QueryMode mode);

/// Called with the token state entering each masking layer, before masking.
using LayerHook = std::function<void(int layer, TokenState& state)>;

/// Runs layers [0, L - k) and returns the state at the masking boundary.
TokenState token_state_at_boundary(const TransformerEncoder& encoder, const Image& img, int k);

/// Runs layers [L - k, L) with token masking and returns the class-token embedding.
EmbeddingVector masked_transformer_suffix(const TransformerEncoder& encoder, TokenState state,
                                          const GridMask& mask, const TokenMaskingConfig& cfg,
                                          const LayerHook& hook = {});

/// Backbone grid for residual encoders; token grid at layer L - k + 1 for transformers.
FeatureGrid backbone_features(const VisualEncoder& encoder, const Image& img, int k = 0);

EmbeddingVector global_visual_feature(const VisualEncoder& encoder, const Image& img,
                                      const MaskProposal& mask, const VisualContextConfig& cfg);
EmbeddingVector local_visual_feature(const VisualEncoder& encoder, const Image& img,
                                     const MaskProposal& mask);

struct VisualFeatures {
  EmbeddingVector fused;
  EmbeddingVector global;
  EmbeddingVector local;
};

VisualFeatures global_local_visual_feature(const VisualEncoder& encoder, const Image& img,
                                           const MaskProposal& mask, double alpha,
                                           const VisualContextConfig& cfg);

// Per-image state shared across proposals: the backbone (or the transformer
// prefix up to the masking boundary) runs once at construction.
class ImageContext {
 public:
  // `encoder` must outlive the context.
  ImageContext(const VisualEncoder& encoder, Image img, VisualContextConfig cfg);
  /// Reuses a previously computed boundary state (e.g. from a disk cache).
  ImageContext(const VisualEncoder& encoder, Image img, VisualContextConfig cfg,
               FeatureGrid backbone, std::optional<std::vector<double>> cls);

  const VisualEncoder& encoder() const { return *encoder_; }
  const VisualContextConfig& config() const { return cfg_; }

  const Image& image() const { return img_; }
  const FeatureGrid& boundary_grid() const;
  const std::vector<double>* boundary_cls() const;

  EmbeddingVector global_feature(const MaskProposal& mask) const;
  EmbeddingVector local_feature(const MaskProposal& mask) const;
  VisualFeatures features(const MaskProposal& mask, double alpha) const;

 private:
  const VisualEncoder* encoder_;
  Image img_;
  VisualContextConfig cfg_;
  std::optional<FeatureGrid> backbone_;  // residual path
  std::optional<TokenState> boundary_;   // transformer path
};

}  // namespace gk
