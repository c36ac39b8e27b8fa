#include "grounding_kit/encoder.hpp"

#include <cmath>

namespace gk {

std::string encoder_kind_name(EncoderKind kind) {
  return kind == EncoderKind::kResidualBackbone ? "residual_backbone" : "patch_transformer";
}

GridShape VisualEncoderInfo::grid_for(int input_resolution, int stride) {
  if (stride < 1 || input_resolution < stride || input_resolution % stride != 0) {
    fail(ErrorCode::kSchemaError, "input resolution " + std::to_string(input_resolution) +
                                      " is not a multiple of stride " + std::to_string(stride));
  }
  return {input_resolution / stride, input_resolution / stride};
}

void VisualEncoderInfo::validate() const {
  if (input_resolution < 1 || grid.rows < 1 || grid.cols < 1) {
    fail(ErrorCode::kSchemaError, "encoder geometry must be positive");
  }
  if (input_resolution % grid.rows != 0 || input_resolution % grid.cols != 0) {
    fail(ErrorCode::kSchemaError, "grid " + std::to_string(grid.rows) + "x" +
                                      std::to_string(grid.cols) +
                                      " does not tile input resolution " +
                                      std::to_string(input_resolution));
  }
  if (channels < 1 || embed_dim < 1) fail(ErrorCode::kSchemaError, "encoder dims must be positive");
  if (kind == EncoderKind::kPatchTransformer && layer_count < 1) {
    fail(ErrorCode::kSchemaError, "patch transformer needs at least one layer");
  }
}

Eigen::MatrixXd grid_to_tokens(const FeatureGrid& grid) {
  const int cells = grid.shape().cells();
  Eigen::MatrixXd tokens(cells, grid.channels());
  for (int c = 0; c < grid.channels(); ++c) {
    for (int i = 0; i < cells; ++i) tokens(i, c) = grid.at(c, i);
  }
  return tokens;
}

Eigen::VectorXd attention_pool_forward(const AttentionPoolWeights& w, const Eigen::MatrixXd& tokens,
                                       const Eigen::VectorXd& query_token) {
  const int n = static_cast<int>(tokens.rows());
  const int channels = w.channels();
  if (tokens.cols() != channels || query_token.size() != channels ||
      w.positional.rows() != n + 1) {
    fail(ErrorCode::kShapeMismatch, "attention pooling input does not match its weights");
  }
  Eigen::MatrixXd x(n + 1, channels);
  x.row(0) = query_token.transpose();
  x.bottomRows(n) = tokens;
  x += w.positional;

  const Eigen::VectorXd q = w.q_proj * x.row(0).transpose() + w.q_bias;
  const Eigen::MatrixXd k = (x * w.k_proj.transpose()).rowwise() + w.k_bias.transpose();
  const Eigen::MatrixXd v = (x * w.v_proj.transpose()).rowwise() + w.v_bias.transpose();

  const int head_dim = channels / w.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Eigen::VectorXd attended(channels);
  for (int h = 0; h < w.heads; ++h) {
    const int off = h * head_dim;
    Eigen::VectorXd logits =
        k.middleCols(off, head_dim) * q.segment(off, head_dim) * scale;
    logits.array() -= logits.maxCoeff();
    Eigen::VectorXd weights = logits.array().exp();
    weights /= weights.sum();
    attended.segment(off, head_dim) = v.middleCols(off, head_dim).transpose() * weights;
  }
  return w.c_proj * attended + w.c_bias;
}

FeatureGrid ResidualEncoder::similarity_gradient(const Image&, const EmbeddingVector&) const {
  fail(ErrorCode::kGradientsUnsupported,
       "this encoder adapter does not provide similarity gradients");
}

EmbeddingVector TransformerEncoder::encode_image(const Image& img) const {
  TokenState state = embed(img);
  for (int layer = 0; layer < layer_count(); ++layer) run_layer(layer, state);
  return head(state);
}

FeatureGrid finite_difference_gradient(const ResidualEncoder& encoder, const FeatureGrid& grid,
                                       const EmbeddingVector& t, double step) {
  FeatureGrid probe = grid;
  FeatureGrid out(grid.channels(), grid.shape(), grid.provenance());
  auto values = probe.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double original = values[i];
    values[i] = original + step;
    const double up = cosine(encoder.attention_pool(probe), t);
    values[i] = original - step;
    const double down = cosine(encoder.attention_pool(probe), t);
    values[i] = original;
    out.values()[i] = (up - down) / (2.0 * step);
  }
  return out;
}

}  // namespace gk
