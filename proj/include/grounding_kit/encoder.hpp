#pragma once

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

#include "grounding_kit/core.hpp"
#include "grounding_kit/image_ops.hpp"

namespace gk {

enum class EncoderKind { kResidualBackbone, kPatchTransformer };

std::string encoder_kind_name(EncoderKind kind);

struct VisualEncoderInfo {
  EncoderKind kind = EncoderKind::kResidualBackbone;
  int input_resolution = 224;
  GridShape grid{7, 7};
  int channels = 0;     // backbone channels, or transformer width
  int embed_dim = 0;    // D of the shared image-text space
  int layer_count = 0;  // patch_transformer only
  Interpolation interpolation = Interpolation::kBilinear;

  /// Grid produced by a backbone of the given stride (or patch size).
  static GridShape grid_for(int input_resolution, int stride);
  void validate() const;
};

struct TextEncoderInfo {
  int embed_dim = 0;
  int max_token_length = 77;
};

// Parameters of a multi-head attention pooling layer: a query token (the
// grid mean) attends over [query; cells], all with learned positional
// embeddings added. Row vectors throughout.
struct AttentionPoolWeights {
  int heads = 1;
  Eigen::MatrixXd positional;  // (cells + 1) x C
  Eigen::MatrixXd q_proj, k_proj, v_proj;  // C x C, applied as W * x
  Eigen::VectorXd q_bias, k_bias, v_bias;
  Eigen::MatrixXd c_proj;  // D x C
  Eigen::VectorXd c_bias;

  int channels() const { return static_cast<int>(q_proj.cols()); }
  int embed_dim() const { return static_cast<int>(c_proj.rows()); }
};

/// Runs the pooling attention for one query token over `tokens` (cells x C,
/// without positional embeddings). Returns the D-dim pooled embedding.
Eigen::VectorXd attention_pool_forward(const AttentionPoolWeights& w, const Eigen::MatrixXd& tokens,
                                       const Eigen::VectorXd& query_token);

/// Converts a feature grid to a cells x C token matrix.
Eigen::MatrixXd grid_to_tokens(const FeatureGrid& grid);

class VisualEncoder {
 public:
  virtual ~VisualEncoder() = default;

  virtual const VisualEncoderInfo& info() const = 0;
  /// Whether concurrent calls on one instance are safe.
  virtual bool concurrent_safe() const { return false; }
  /// Stable identifier of weights and geometry; keys the feature cache.
  virtual std::string fingerprint() const = 0;

  /// Vanilla whole-image embedding. Resizes to input_resolution internally.
  virtual EmbeddingVector encode_image(const Image& img) const = 0;
};

class ResidualEncoder : public VisualEncoder {
 public:
  /// Backbone output before attention pooling.
  virtual FeatureGrid backbone_features(const Image& img) const = 0;
  virtual EmbeddingVector attention_pool(const FeatureGrid& grid) const = 0;

  /// Pooling weights, required for masked pooling and dense score maps.
  /// Returns nullptr when the adapter cannot expose them.
  virtual const AttentionPoolWeights* pooling_weights() const { return nullptr; }

  /// d cosine(encode_image(img), t) / d backbone_features(img).
  virtual FeatureGrid similarity_gradient(const Image& img, const EmbeddingVector& t) const;

  EmbeddingVector encode_image(const Image& img) const override {
    return attention_pool(backbone_features(img));
  }
};

/// Class token plus grid tokens, the state flowing between transformer layers.
struct TokenState {
  std::vector<double> cls;
  FeatureGrid grid;
};

class TransformerEncoder : public VisualEncoder {
 public:
  int layer_count() const { return info().layer_count; }

  /// Token state entering layer 0.
  virtual TokenState embed(const Image& img) const = 0;
  /// Applies layer `layer` (0-based) in place.
  virtual void run_layer(int layer, TokenState& state) const = 0;
  /// Final normalization and projection of the class token.
  virtual EmbeddingVector head(const TokenState& state) const = 0;

  EmbeddingVector encode_image(const Image& img) const override;
};

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual const TextEncoderInfo& info() const = 0;
  virtual bool concurrent_safe() const { return false; }
  virtual std::string fingerprint() const = 0;
  /// Over-long inputs are truncated with a warning.
  virtual EmbeddingVector encode_text(const std::string& text) const = 0;
};

/// Central-difference gradient of cosine(attention_pool(grid), t) w.r.t. the
/// grid. Used by adapters without analytic gradients.
FeatureGrid finite_difference_gradient(const ResidualEncoder& encoder, const FeatureGrid& grid,
                                       const EmbeddingVector& t, double step = 1e-5);

}  // namespace gk
