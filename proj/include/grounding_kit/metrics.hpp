#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "grounding_kit/core.hpp"
#include "grounding_kit/mask_io.hpp"

namespace gk {

struct Overlap {
  std::uint64_t intersection = 0;
  std::uint64_t union_area = 0;

  /// |a & b| / |a | b|; 1 when both masks are empty.
  double iou() const {
    return union_area == 0 ? 1.0
                           : static_cast<double>(intersection) / static_cast<double>(union_area);
  }
  friend bool operator==(const Overlap&, const Overlap&) = default;
};

Overlap overlap(const MaskProposal& a, const MaskProposal& b);
double iou(const MaskProposal& a, const MaskProposal& b);

using MaskPair = std::pair<MaskProposal, MaskProposal>;  // (prediction, ground truth)

/// Sum of intersections over sum of unions. 0 for an empty list; 1 when every
/// pair is empty on both sides.
double overall_iou(const std::vector<MaskPair>& pairs);
double overall_iou(const std::vector<Overlap>& overlaps);
/// Mean per-pair IoU. 0 for an empty list.
double mean_iou(const std::vector<MaskPair>& pairs);
double mean_iou(const std::vector<Overlap>& overlaps);

struct UpperBound {
  double oiou = 0.0;
  double miou = 0.0;
  std::vector<int> best_index;  // per record
  std::vector<Overlap> overlaps;
};

/// Oracle selection: per record, the proposal with maximal IoU against the
/// ground truth (lowest index on ties). Throws SelectionImpossible when a
/// record's image has no proposals.
UpperBound proposal_upper_bound(const std::vector<EvalRecord>& records,
                                const std::vector<ProposalImage>& proposals);

/// Index of the mask in `candidates` with the largest IoU against `target`
/// (lowest index on ties), or -1 when none overlaps it.
int best_overlap_index(const MaskProposal& target, const std::vector<MaskProposal>& candidates);

struct ClassedMask {
  std::string object_class;
  MaskProposal mask;
};

/// image id -> every ground-truth instance of that image with its class.
using GtInventory = std::map<std::string, std::vector<ClassedMask>>;

/// Inventory from an instances file.
GtInventory inventory_from_instances(const std::vector<InstanceImage>& images);
/// Inventory from the classed records themselves (distinct masks per image).
GtInventory inventory_from_records(const std::vector<EvalRecord>& records);

struct MaskClassMetrics {
  double mc_acc = 0.0;
  double cc_oiou = 0.0;
  int considered = 0;  // records carrying a target class
  int correct = 0;
};

/// A prediction's class is the class of the inventory mask overlapping it
/// most. MC-ACC is the fraction of classed records whose prediction class
/// matches the target class (a missing prediction counts as a miss); CC-oIoU
/// is the overall IoU over the matching records.
MaskClassMetrics mask_class_metrics(const std::vector<EvalRecord>& records,
                                    const std::vector<std::optional<MaskProposal>>& predictions,
                                    const GtInventory& inventory);

}  // namespace gk
