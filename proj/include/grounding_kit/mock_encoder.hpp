#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "grounding_kit/encoder.hpp"
#include "grounding_kit/kv_config.hpp"

namespace gk {

enum class GradientMode { kAnalytic, kFiniteDifference, kNone };

// Deterministic stand-in for a pretrained dual encoder. Every output is a
// pure function of the input bytes and `seed`.
struct MockEncoderConfig {
  EncoderKind kind = EncoderKind::kResidualBackbone;
  int input_resolution = 224;
  GridShape grid{7, 7};
  int channels = 32;
  int embed_dim = 16;
  int layers = 4;  // patch_transformer only
  int heads = 2;
  int mlp_ratio = 2;
  std::uint64_t seed = 42;
  GradientMode gradients = GradientMode::kAnalytic;
  Interpolation interpolation = Interpolation::kBilinear;
  int max_token_length = 77;

  void validate() const;
  std::string fingerprint() const;
};

class MockResidualEncoder final : public ResidualEncoder {
 public:
  explicit MockResidualEncoder(MockEncoderConfig cfg);

  const VisualEncoderInfo& info() const override { return info_; }
  bool concurrent_safe() const override { return true; }
  std::string fingerprint() const override { return cfg_.fingerprint(); }

  FeatureGrid backbone_features(const Image& img) const override;
  EmbeddingVector attention_pool(const FeatureGrid& grid) const override;
  const AttentionPoolWeights* pooling_weights() const override { return &pool_; }
  FeatureGrid similarity_gradient(const Image& img, const EmbeddingVector& t) const override;

  /// Backpropagates cosine(attention_pool(grid), t) to the grid.
  FeatureGrid analytic_gradient(const FeatureGrid& grid, const EmbeddingVector& t) const;

 private:
  MockEncoderConfig cfg_;
  VisualEncoderInfo info_;
  Eigen::MatrixXd color_map_;  // C x 3
  Eigen::VectorXd color_bias_;
  AttentionPoolWeights pool_;
};

class MockTransformerEncoder final : public TransformerEncoder {
 public:
  explicit MockTransformerEncoder(MockEncoderConfig cfg);

  const VisualEncoderInfo& info() const override { return info_; }
  bool concurrent_safe() const override { return true; }
  std::string fingerprint() const override { return cfg_.fingerprint(); }

  TokenState embed(const Image& img) const override;
  void run_layer(int layer, TokenState& state) const override;
  EmbeddingVector head(const TokenState& state) const override;

 private:
  struct Layer {
    Eigen::VectorXd ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
    Eigen::MatrixXd wq, wk, wv, wo;  // C x C
    Eigen::VectorXd bq, bk, bv, bo;
    Eigen::MatrixXd w1;  // H x C
    Eigen::VectorXd b1;
    Eigen::MatrixXd w2;  // C x H
    Eigen::VectorXd b2;
  };

  MockEncoderConfig cfg_;
  VisualEncoderInfo info_;
  Eigen::MatrixXd patch_map_;  // C x 3
  Eigen::VectorXd patch_bias_;
  Eigen::VectorXd class_embedding_;
  Eigen::MatrixXd positional_;  // (cells + 1) x C
  std::vector<Layer> layers_;
  Eigen::VectorXd post_gamma_, post_beta_;
  Eigen::MatrixXd proj_;  // D x C
};

class MockTextEncoder final : public TextEncoder {
 public:
  MockTextEncoder(int embed_dim, int max_token_length, std::uint64_t seed);

  const TextEncoderInfo& info() const override { return info_; }
  bool concurrent_safe() const override { return true; }
  std::string fingerprint() const override;

  /// Whitespace tokenization; two slots are reserved for start/end markers.
  EmbeddingVector encode_text(const std::string& text) const override;

 private:
  TextEncoderInfo info_;
  std::uint64_t seed_;
};

/// Per-patch mean colors, normalized, as a cells x 3 matrix.
Eigen::MatrixXd patch_mean_colors(const Image& resized, GridShape grid);

struct EncoderPair {
  std::shared_ptr<const VisualEncoder> visual;
  std::shared_ptr<const TextEncoder> text;
  KeyValueConfig resolved;  // the settings actually used
};

// Adapter configuration keys:
//   kind              mock-residual | mock-transformer
//   weights           weight location (unused by mocks)
//   input-resolution  square encoder input side, default 224
//   grid              RxC feature grid, or `stride` to derive it
//   embed-dim, width, layers, heads, seed, max-tokens
//   gradients         analytic | finite-difference | none
//   interpolation     bilinear | nearest
EncoderPair make_encoders(const KeyValueConfig& cfg);
EncoderPair load_encoders(const std::filesystem::path& path);
MockEncoderConfig mock_config_from(const KeyValueConfig& cfg);

}  // namespace gk
