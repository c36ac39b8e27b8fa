#include "grounding_kit/baselines.hpp"

#include <algorithm>

#include "grounding_kit/parallel.hpp"
#include "grounding_kit/visual_context.hpp"

namespace gk {

BaselineKind parse_baseline(const std::string& name) {
  if (name == "grad-cam") return BaselineKind::kGradCam;
  if (name == "score-map") return BaselineKind::kScoreMap;
  if (name == "region-token") return BaselineKind::kRegionToken;
  if (name == "cropping") return BaselineKind::kCropping;
  fail(ErrorCode::kSchemaError, "unknown baseline '" + name +
                                    "' (expected grad-cam, score-map, region-token, cropping)");
}

std::string baseline_name(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kGradCam: return "grad-cam";
    case BaselineKind::kScoreMap: return "score-map";
    case BaselineKind::kRegionToken: return "region-token";
    case BaselineKind::kCropping: return "cropping";
  }
  return "unknown";
}

std::vector<double> grad_cam_map(const FeatureGrid& activations, const FeatureGrid& gradient) {
  if (activations.shape() != gradient.shape() || activations.channels() != gradient.channels()) {
    fail(ErrorCode::kShapeMismatch, "gradient does not match the activations");
  }
  const int cells = activations.shape().cells();
  std::vector<double> map(static_cast<std::size_t>(cells), 0.0);
  for (int c = 0; c < activations.channels(); ++c) {
    double weight = 0.0;
    for (int i = 0; i < cells; ++i) weight += gradient.at(c, i);
    weight /= cells;
    for (int i = 0; i < cells; ++i) map[static_cast<std::size_t>(i)] += weight * activations.at(c, i);
  }
  for (double& v : map) v = std::max(v, 0.0);
  return map;
}

std::vector<double> dense_similarity_map(const AttentionPoolWeights& weights,
                                         const FeatureGrid& grid, const EmbeddingVector& t) {
  if (grid.channels() != weights.channels()) {
    fail(ErrorCode::kShapeMismatch, "grid channels do not match the pooling weights");
  }
  const Eigen::MatrixXd tokens = grid_to_tokens(grid);
  const Eigen::MatrixXd values =
      (tokens * weights.v_proj.transpose()).rowwise() + weights.v_bias.transpose();
  const Eigen::MatrixXd dense =
      (values * weights.c_proj.transpose()).rowwise() + weights.c_bias.transpose();
  std::vector<double> map(static_cast<std::size_t>(dense.rows()));
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    std::vector<double> cell(dense.cols());
    for (Eigen::Index c = 0; c < dense.cols(); ++c) cell[static_cast<std::size_t>(c)] = dense(i, c);
    map[static_cast<std::size_t>(i)] = cosine(EmbeddingVector(std::move(cell)), t);
  }
  return map;
}

std::vector<double> mask_mean_scores(const std::vector<double>& map, GridShape grid,
                                     const ProposalSet& props) {
  if (map.size() != static_cast<std::size_t>(grid.cells())) {
    fail(ErrorCode::kShapeMismatch, "score map does not match the grid");
  }
  std::vector<double> scores(props.size());
  for (std::size_t p = 0; p < props.size(); ++p) {
    if (props.proposals[p].empty()) {
      scores[p] = kEmptyProposalScore;
      continue;
    }
    const GridMask gm = resize_mask_to_grid(props.proposals[p], grid);
    double sum = 0.0;
    for (int i = 0; i < grid.cells(); ++i) {
      if (gm.at(i)) sum += map[static_cast<std::size_t>(i)];
    }
    scores[p] = sum / gm.count();
  }
  return scores;
}

namespace {

const ResidualEncoder& residual_for(const VisualEncoder& encoder, ErrorCode code,
                                    const char* what) {
  const auto* r = dynamic_cast<const ResidualEncoder*>(&encoder);
  if (!r) fail(code, std::string(what) + " needs a residual-backbone encoder");
  return *r;
}

}  // namespace

std::vector<double> grad_cam_scores(const VisualEncoder& encoder, const Image& img,
                                    const EmbeddingVector& t, const ProposalSet& props) {
  props.validate(img.height(), img.width());
  const ResidualEncoder& r = residual_for(encoder, ErrorCode::kGradientsUnsupported, "grad-cam");
  const FeatureGrid gradient = r.similarity_gradient(img, t);
  const FeatureGrid activations = r.backbone_features(img);
  return mask_mean_scores(grad_cam_map(activations, gradient), activations.shape(), props);
}

std::vector<double> score_map_scores(const VisualEncoder& encoder, const Image& img,
                                     const EmbeddingVector& t, const ProposalSet& props) {
  props.validate(img.height(), img.width());
  const ResidualEncoder& r = residual_for(encoder, ErrorCode::kSurgeryUnsupported, "score-map");
  const AttentionPoolWeights* w = r.pooling_weights();
  if (!w) {
    fail(ErrorCode::kSurgeryUnsupported,
         "score-map needs the value and output projection weights of the pooling layer");
  }
  const FeatureGrid grid = r.backbone_features(img);
  return mask_mean_scores(dense_similarity_map(*w, grid, t), grid.shape(), props);
}

std::vector<double> region_token_scores(const VisualEncoder& encoder, const Image& img,
                                        const EmbeddingVector& t, const ProposalSet& props,
                                        int threads) {
  props.validate(img.height(), img.width());
  if (encoder.info().kind != EncoderKind::kPatchTransformer) {
    fail(ErrorCode::kSurgeryUnsupported, "region-token needs a patch-transformer encoder");
  }
  VisualContextConfig cfg;
  cfg.masking = TokenMaskingConfig{encoder.info().layer_count, true};
  const ImageContext context(encoder, img, cfg);
  std::vector<double> scores(props.size());
  parallel_for(props.size(), effective_threads(threads, encoder.concurrent_safe()),
               [&](std::size_t p) {
                 scores[p] = props.proposals[p].empty()
                                 ? kEmptyProposalScore
                                 : cosine(t, context.global_feature(props.proposals[p]));
               });
  return scores;
}

std::vector<double> cropping_scores(const VisualEncoder& encoder, const Image& img,
                                    const EmbeddingVector& t, const ProposalSet& props,
                                    int threads) {
  props.validate(img.height(), img.width());
  std::vector<double> scores(props.size());
  parallel_for(props.size(), effective_threads(threads, encoder.concurrent_safe()),
               [&](std::size_t p) {
                 scores[p] = props.proposals[p].empty()
                                 ? kEmptyProposalScore
                                 : cosine(t, local_visual_feature(encoder, img, props.proposals[p]));
               });
  return scores;
}

std::vector<double> baseline_scores(BaselineKind kind, const VisualEncoder& encoder,
                                    const Image& img, const EmbeddingVector& t,
                                    const ProposalSet& props, int threads) {
  switch (kind) {
    case BaselineKind::kGradCam: return grad_cam_scores(encoder, img, t, props);
    case BaselineKind::kScoreMap: return score_map_scores(encoder, img, t, props);
    case BaselineKind::kRegionToken: return region_token_scores(encoder, img, t, props, threads);
    case BaselineKind::kCropping: return cropping_scores(encoder, img, t, props, threads);
  }
  fail(ErrorCode::kInvalidArgument, "unknown baseline");
}

}  // namespace gk
