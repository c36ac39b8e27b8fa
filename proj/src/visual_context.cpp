#include "grounding_kit/visual_context.hpp"

#include <algorithm>
#include <cmath>

namespace gk {

namespace {

void require_nonempty(const MaskProposal& mask) {
  if (mask.empty()) fail(ErrorCode::kEmptyMask, "mask proposal has no foreground pixels");
}

void require_same_shape(const Image& img, const MaskProposal& mask) {
  if (img.height() != mask.height() || img.width() != mask.width()) {
    fail(ErrorCode::kShapeMismatch,
         "mask " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
             " does not match image " + std::to_string(img.height()) + "x" +
             std::to_string(img.width()));
  }
}

// Pixel span [begin, end) of cell `index` when `extent` pixels are binned
// into `cells` proportional cells. Spans cover every pixel and are never empty.
std::pair<int, int> cell_span(int index, int cells, int extent) {
  const long long begin = static_cast<long long>(index) * extent / cells;
  const long long end_num = static_cast<long long>(index + 1) * extent;
  long long end = (end_num + cells - 1) / cells;
  end = std::max(end, begin + 1);
  return {static_cast<int>(begin), static_cast<int>(std::min<long long>(end, extent))};
}

const TransformerEncoder& as_transformer(const VisualEncoder& encoder) {
  const auto* t = dynamic_cast<const TransformerEncoder*>(&encoder);
  if (!t) fail(ErrorCode::kSurgeryUnsupported, "encoder is not a patch transformer");
  return *t;
}

const ResidualEncoder& as_residual(const VisualEncoder& encoder) {
  const auto* r = dynamic_cast<const ResidualEncoder*>(&encoder);
  if (!r) fail(ErrorCode::kSurgeryUnsupported, "encoder is not a residual backbone");
  return *r;
}

const AttentionPoolWeights& require_pool(const ResidualEncoder& encoder) {
  const AttentionPoolWeights* w = encoder.pooling_weights();
  if (!w) {
    fail(ErrorCode::kSurgeryUnsupported,
         "masked attention pooling needs the adapter's pooling weights");
  }
  return *w;
}

void check_k(const TransformerEncoder& encoder, int k) {
  if (k < 0 || k > encoder.layer_count()) {
    fail(ErrorCode::kInvalidArgument, "mask layer count k=" + std::to_string(k) +
                                          " outside [0, " +
                                          std::to_string(encoder.layer_count()) + "]");
  }
}

void zero_out_of_mask(FeatureGrid& grid, const GridMask& mask) {
  const int cells = grid.shape().cells();
  for (int i = 0; i < cells; ++i) {
    if (mask.at(i)) continue;
    for (int c = 0; c < grid.channels(); ++c) grid.at(c, i) = 0.0;
  }
}

}  // namespace

GridMask resize_mask_to_grid(const MaskProposal& mask, GridShape grid) {
  require_nonempty(mask);
  if (grid.rows < 1 || grid.cols < 1) fail(ErrorCode::kInvalidArgument, "grid must be positive");
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(grid.cells()), 0);
  for (int gr = 0; gr < grid.rows; ++gr) {
    const auto [y0, y1] = cell_span(gr, grid.rows, mask.height());
    for (int gc = 0; gc < grid.cols; ++gc) {
      const auto [x0, x1] = cell_span(gc, grid.cols, mask.width());
      bool hit = false;
      for (int y = y0; y < y1 && !hit; ++y) {
        for (int x = x0; x < x1; ++x) {
          if (mask.at(y, x)) {
            hit = true;
            break;
          }
        }
      }
      bits[static_cast<std::size_t>(gr) * grid.cols + gc] = hit ? 1 : 0;
    }
  }
  return GridMask(grid, std::move(bits));
}

BoundingBox mask_bbox(const MaskProposal& mask) {
  require_nonempty(mask);
  BoundingBox box{mask.height(), mask.width(), 0, 0};
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (!mask.at(y, x)) continue;
      box.row0 = std::min(box.row0, y);
      box.col0 = std::min(box.col0, x);
      box.row1 = std::max(box.row1, y + 1);
      box.col1 = std::max(box.col1, x + 1);
    }
  }
  return box;
}

CropSpec crop_spec_for(const MaskProposal& mask) { return CropSpec{mask_bbox(mask), true, 0}; }

Image apply_crop(const Image& img, const MaskProposal& mask, const CropSpec& spec) {
  require_same_shape(img, mask);
  const BoundingBox& b = spec.bbox;
  if (b.row0 < 0 || b.col0 < 0 || b.row1 > img.height() || b.col1 > img.width() ||
      b.row1 <= b.row0 || b.col1 <= b.col0) {
    fail(ErrorCode::kInvalidArgument, "crop box outside the image");
  }
  const int side = std::max(b.height(), b.width());
  const int out_h = spec.pad_to_square ? side : b.height();
  const int out_w = spec.pad_to_square ? side : b.width();
  const int off_y = (out_h - b.height()) / 2;
  const int off_x = (out_w - b.width()) / 2;

  Image out = Image::filled(out_h, out_w, spec.fill_value, spec.fill_value, spec.fill_value,
                            img.id());
  for (int y = b.row0; y < b.row1; ++y) {
    for (int x = b.col0; x < b.col1; ++x) {
      const bool on = mask.at(y, x);
      for (int c = 0; c < 3; ++c) {
        out.at(y - b.row0 + off_y, x - b.col0 + off_x, c) = on ? img.at(y, x, c) : 0;
      }
    }
  }
  return out;
}

Image crop_to_mask(const Image& img, const MaskProposal& mask) {
  require_same_shape(img, mask);
  return apply_crop(img, mask, crop_spec_for(mask));
}

EmbeddingVector masked_attention_pool(const AttentionPoolWeights& weights, const FeatureGrid& grid,
                                      const GridMask& mask, QueryMode mode) {
  if (mask.shape() != grid.shape()) {
    fail(ErrorCode::kShapeMismatch, "grid mask does not match the feature grid");
  }
  const int in_mask = mask.count();
  if (in_mask == 0) fail(ErrorCode::kEmptyMask, "grid mask has no cells set");

  FeatureGrid masked = grid;
  zero_out_of_mask(masked, mask);
  const Eigen::MatrixXd tokens = grid_to_tokens(masked);

  Eigen::VectorXd query = Eigen::VectorXd::Zero(tokens.cols());
  if (mode == QueryMode::kInMaskMean) {
    for (Eigen::Index i = 0; i < tokens.rows(); ++i) {
      if (mask.at(static_cast<int>(i))) query += tokens.row(i).transpose();
    }
    query /= static_cast<double>(in_mask);
  } else {
    query = tokens.colwise().mean().transpose();
  }
  const Eigen::VectorXd pooled = attention_pool_forward(weights, tokens, query);
  return EmbeddingVector(std::vector<double>(pooled.data(), pooled.data() + pooled.size()));
}

TokenState token_state_at_boundary(const TransformerEncoder& encoder, const Image& img, int k) {
  check_k(encoder, k);
  TokenState state = encoder.embed(img);
  for (int layer = 0; layer < encoder.layer_count() - k; ++layer) encoder.run_layer(layer, state);
  return state;
}

EmbeddingVector masked_transformer_suffix(const TransformerEncoder& encoder, TokenState state,
                                          const GridMask& mask, const TokenMaskingConfig& cfg,
                                          const LayerHook& hook) {
  check_k(encoder, cfg.k);
  if (mask.shape() != state.grid.shape()) {
    fail(ErrorCode::kShapeMismatch, "grid mask does not match the token grid");
  }
  const int first = encoder.layer_count() - cfg.k;
  for (int layer = first; layer < encoder.layer_count(); ++layer) {
    if (hook) hook(layer, state);
    // The class token has no grid position and is never masked.
    if (layer == first || cfg.reapply_per_layer) zero_out_of_mask(state.grid, mask);
    encoder.run_layer(layer, state);
  }
  return encoder.head(state);
}

FeatureGrid backbone_features(const VisualEncoder& encoder, const Image& img, int k) {
  if (encoder.info().kind == EncoderKind::kResidualBackbone) {
    return as_residual(encoder).backbone_features(img);
  }
  return token_state_at_boundary(as_transformer(encoder), img, k).grid;
}

EmbeddingVector global_visual_feature(const VisualEncoder& encoder, const Image& img,
                                      const MaskProposal& mask, const VisualContextConfig& cfg) {
  require_same_shape(img, mask);
  const GridMask grid_mask = resize_mask_to_grid(mask, encoder.info().grid);
  if (encoder.info().kind == EncoderKind::kResidualBackbone) {
    const ResidualEncoder& residual = as_residual(encoder);
    return masked_attention_pool(require_pool(residual), residual.backbone_features(img),
                                 grid_mask, cfg.query_mode);
  }
  const TransformerEncoder& transformer = as_transformer(encoder);
  return masked_transformer_suffix(
      transformer, token_state_at_boundary(transformer, img, cfg.masking.k), grid_mask,
      cfg.masking);
}

EmbeddingVector local_visual_feature(const VisualEncoder& encoder, const Image& img,
                                     const MaskProposal& mask) {
  return encoder.encode_image(crop_to_mask(img, mask));
}

VisualFeatures global_local_visual_feature(const VisualEncoder& encoder, const Image& img,
                                           const MaskProposal& mask, double alpha,
                                           const VisualContextConfig& cfg) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::kWeightOutOfRange, "alpha outside [0, 1]");
  EmbeddingVector global = global_visual_feature(encoder, img, mask, cfg);
  EmbeddingVector local = local_visual_feature(encoder, img, mask);
  EmbeddingVector fused = fuse(global, local, alpha);
  return {std::move(fused), std::move(global), std::move(local)};
}

// ---------------------------------------------------------------------------

ImageContext::ImageContext(const VisualEncoder& encoder, Image img, VisualContextConfig cfg)
    : encoder_(&encoder), img_(std::move(img)), cfg_(cfg) {
  if (encoder_->info().kind == EncoderKind::kResidualBackbone) {
    backbone_ = as_residual(*encoder_).backbone_features(img_);
  } else {
    boundary_ = token_state_at_boundary(as_transformer(*encoder_), img_, cfg_.masking.k);
  }
}

ImageContext::ImageContext(const VisualEncoder& encoder, Image img, VisualContextConfig cfg,
                           FeatureGrid backbone, std::optional<std::vector<double>> cls)
    : encoder_(&encoder), img_(std::move(img)), cfg_(cfg) {
  const VisualEncoderInfo& info = encoder_->info();
  if (backbone.shape() != info.grid || backbone.channels() != info.channels) {
    fail(ErrorCode::kShapeMismatch, "cached backbone grid does not match the encoder");
  }
  if (info.kind == EncoderKind::kResidualBackbone) {
    backbone_ = std::move(backbone);
  } else {
    if (!cls || static_cast<int>(cls->size()) != info.channels) {
      fail(ErrorCode::kShapeMismatch, "cached token state lacks a class token");
    }
    boundary_ = TokenState{std::move(*cls), std::move(backbone)};
  }
}

const FeatureGrid& ImageContext::boundary_grid() const {
  return backbone_ ? *backbone_ : boundary_->grid;
}

const std::vector<double>* ImageContext::boundary_cls() const {
  return boundary_ ? &boundary_->cls : nullptr;
}

EmbeddingVector ImageContext::global_feature(const MaskProposal& mask) const {
  require_same_shape(img_, mask);
  const GridMask grid_mask = resize_mask_to_grid(mask, encoder_->info().grid);
  if (backbone_) {
    return masked_attention_pool(require_pool(as_residual(*encoder_)), *backbone_, grid_mask,
                                 cfg_.query_mode);
  }
  return masked_transformer_suffix(as_transformer(*encoder_), *boundary_, grid_mask,
                                   cfg_.masking);
}

EmbeddingVector ImageContext::local_feature(const MaskProposal& mask) const {
  return local_visual_feature(*encoder_, img_, mask);
}

VisualFeatures ImageContext::features(const MaskProposal& mask, double alpha) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::kWeightOutOfRange, "alpha outside [0, 1]");
  EmbeddingVector global = global_feature(mask);
  EmbeddingVector local = local_feature(mask);
  EmbeddingVector fused = fuse(global, local, alpha);
  return {std::move(fused), std::move(global), std::move(local)};
}

}  // namespace gk
