#pragma once

#include <limits>
#include <vector>

#include "grounding_kit/core.hpp"
#include "grounding_kit/encoder.hpp"
#include "grounding_kit/text_context.hpp"
#include "grounding_kit/visual_context.hpp"

namespace gk {

/// Candidate masks for one image, in file order.
struct ProposalSet {
  std::vector<MaskProposal> proposals;

  std::size_t size() const { return proposals.size(); }
  /// Non-empty, and every mask matches height x width.
  void validate(int height, int width) const;
};

inline constexpr double kEmptyProposalScore = -std::numeric_limits<double>::infinity();

struct ScoringConfig {
  VisualContextConfig visual;
  int threads = 1;
};

/// Scores every proposal as cosine(t, f_m) against a prepared image context.
/// Empty proposals keep their slot with the -inf sentinel.
std::vector<ScoredMask> score_with_context(const ImageContext& context, const ProposalSet& props,
                                           const EmbeddingVector& text_feature, double alpha,
                                           int threads = 1);

/// Full pipeline for one expression: fused text feature, per-image backbone
/// pass, fused visual feature per proposal, cosine scores.
std::vector<ScoredMask> score_proposals(const VisualEncoder& visual, const TextEncoder& text,
                                        const Image& img, const ProposalSet& props,
                                        const Expression& expression, const ParseTree& parse,
                                        const FusionWeights& weights, const ScoringConfig& cfg);

/// Highest score; ties go to the lowest index. Throws SelectionImpossible
/// when no proposal carries a real score.
ScoredMask select_mask(const std::vector<ScoredMask>& scored);

/// Wraps raw per-proposal scores; -inf marks an empty proposal.
std::vector<ScoredMask> to_scored(const std::vector<double>& scores);

/// Worker count honoring an adapter's concurrency declaration.
int effective_threads(int requested, bool adapter_concurrent_safe);

}  // namespace gk
