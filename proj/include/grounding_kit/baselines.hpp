#pragma once

#include <string>
#include <vector>

#include "grounding_kit/core.hpp"
#include "grounding_kit/encoder.hpp"
#include "grounding_kit/scoring.hpp"

namespace gk {

// Zero-shot comparison methods adapted to proposal scoring. Each returns one
// score per proposal (kEmptyProposalScore for empty ones), ready for to_scored().
enum class BaselineKind { kGradCam, kScoreMap, kRegionToken, kCropping };

BaselineKind parse_baseline(const std::string& name);
std::string baseline_name(BaselineKind kind);

/// ReLU(sum_c w_c * A_c), w_c = spatial mean of the gradient of channel c.
std::vector<double> grad_cam_map(const FeatureGrid& activations, const FeatureGrid& gradient);

/// Cosine between t and each cell's dense embedding (value then output
/// projection of the pooling layer, no query/key).
std::vector<double> dense_similarity_map(const AttentionPoolWeights& weights,
                                         const FeatureGrid& grid, const EmbeddingVector& t);

/// Mean of `map` over each proposal's in-mask grid cells.
std::vector<double> mask_mean_scores(const std::vector<double>& map, GridShape grid,
                                     const ProposalSet& props);

std::vector<double> grad_cam_scores(const VisualEncoder& encoder, const Image& img,
                                    const EmbeddingVector& t, const ProposalSet& props);
std::vector<double> score_map_scores(const VisualEncoder& encoder, const Image& img,
                                     const EmbeddingVector& t, const ProposalSet& props);
std::vector<double> region_token_scores(const VisualEncoder& encoder, const Image& img,
                                        const EmbeddingVector& t, const ProposalSet& props,
                                        int threads = 1);
std::vector<double> cropping_scores(const VisualEncoder& encoder, const Image& img,
                                    const EmbeddingVector& t, const ProposalSet& props,
                                    int threads = 1);

std::vector<double> baseline_scores(BaselineKind kind, const VisualEncoder& encoder,
                                    const Image& img, const EmbeddingVector& t,
                                    const ProposalSet& props, int threads = 1);

}  // namespace gk
