#include "grounding_kit/scoring.hpp"

#include <cmath>

#include "grounding_kit/parallel.hpp"

namespace gk {

void ProposalSet::validate(int height, int width) const {
  if (proposals.empty()) fail(ErrorCode::kSelectionImpossible, "proposal set is empty");
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (proposals[i].height() != height || proposals[i].width() != width) {
      fail(ErrorCode::kShapeMismatch,
           "proposal " + std::to_string(i) + " is " + std::to_string(proposals[i].height()) +
               "x" + std::to_string(proposals[i].width()) + ", image is " +
               std::to_string(height) + "x" + std::to_string(width));
    }
  }
}

int effective_threads(int requested, bool adapter_concurrent_safe) {
  return adapter_concurrent_safe ? std::max(requested, 1) : 1;
}

std::vector<ScoredMask> score_with_context(const ImageContext& context, const ProposalSet& props,
                                           const EmbeddingVector& text_feature, double alpha,
                                           int threads) {
  props.validate(context.image().height(), context.image().width());
  std::vector<ScoredMask> out(props.size());
  parallel_for(props.size(), effective_threads(threads, context.encoder().concurrent_safe()),
               [&](std::size_t i) {
                 ScoredMask& slot = out[i];
                 slot.proposal_index = static_cast<int>(i);
                 const MaskProposal& mask = props.proposals[i];
                 if (mask.empty()) {
                   slot.score = kEmptyProposalScore;
                   slot.empty_proposal = true;
                   return;
                 }
                 const VisualFeatures f = context.features(mask, alpha);
                 slot.score = cosine(text_feature, f.fused);
                 slot.breakdown =
                     ScoreBreakdown{cosine(text_feature, f.global), cosine(text_feature, f.local)};
               });
  return out;
}

std::vector<ScoredMask> score_proposals(const VisualEncoder& visual, const TextEncoder& text,
                                        const Image& img, const ProposalSet& props,
                                        const Expression& expression, const ParseTree& parse,
                                        const FusionWeights& weights, const ScoringConfig& cfg) {
  weights.validate();
  props.validate(img.height(), img.width());
  const TextFeatures t = global_local_text_feature(text, expression, parse, weights.beta);
  const ImageContext context(visual, img, cfg.visual);
  return score_with_context(context, props, t.fused, weights.alpha, cfg.threads);
}

ScoredMask select_mask(const std::vector<ScoredMask>& scored) {
  const ScoredMask* best = nullptr;
  for (const ScoredMask& s : scored) {
    if (s.empty_proposal || !std::isfinite(s.score)) continue;
    // Strict comparison keeps the first (lowest-index) maximum.
    if (!best || s.score > best->score ||
        (s.score == best->score && s.proposal_index < best->proposal_index)) {
      best = &s;
    }
  }
  if (!best) fail(ErrorCode::kSelectionImpossible, "no proposal has a valid score");
  return *best;
}

std::vector<ScoredMask> to_scored(const std::vector<double>& scores) {
  std::vector<ScoredMask> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i].proposal_index = static_cast<int>(i);
    out[i].score = scores[i];
    out[i].empty_proposal = scores[i] == kEmptyProposalScore;
  }
  return out;
}

}  // namespace gk
