#include "grounding_kit/metrics.hpp"

namespace gk {

Overlap overlap(const MaskProposal& a, const MaskProposal& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    fail(ErrorCode::kShapeMismatch, "IoU of masks with different shapes");
  }
  Overlap o;
  const auto ab = a.bits();
  const auto bb = b.bits();
  for (std::size_t i = 0; i < ab.size(); ++i) {
    o.intersection += (ab[i] & bb[i]);
    o.union_area += (ab[i] | bb[i]);
  }
  return o;
}

double iou(const MaskProposal& a, const MaskProposal& b) { return overlap(a, b).iou(); }

double overall_iou(const std::vector<Overlap>& overlaps) {
  if (overlaps.empty()) return 0.0;
  std::uint64_t inter = 0, uni = 0;
  for (const Overlap& o : overlaps) {
    inter += o.intersection;
    uni += o.union_area;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_iou(const std::vector<Overlap>& overlaps) {
  if (overlaps.empty()) return 0.0;
  double sum = 0.0;
  for (const Overlap& o : overlaps) sum += o.iou();
  return sum / static_cast<double>(overlaps.size());
}

namespace {

std::vector<Overlap> overlaps_of(const std::vector<MaskPair>& pairs) {
  std::vector<Overlap> out;
  out.reserve(pairs.size());
  for (const auto& [pred, gt] : pairs) out.push_back(overlap(pred, gt));
  return out;
}

}  // namespace

double overall_iou(const std::vector<MaskPair>& pairs) { return overall_iou(overlaps_of(pairs)); }
double mean_iou(const std::vector<MaskPair>& pairs) { return mean_iou(overlaps_of(pairs)); }

int best_overlap_index(const MaskProposal& target, const std::vector<MaskProposal>& candidates) {
  int best = -1;
  double best_iou = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Overlap o = overlap(target, candidates[i]);
    if (o.intersection == 0) continue;
    const double v = o.iou();
    if (best < 0 || v > best_iou) {
      best = static_cast<int>(i);
      best_iou = v;
    }
  }
  return best;
}

UpperBound proposal_upper_bound(const std::vector<EvalRecord>& records,
                                const std::vector<ProposalImage>& proposals) {
  const auto by_id = index_by_id(proposals);
  UpperBound ub;
  for (const EvalRecord& rec : records) {
    auto it = by_id.find(rec.image_id);
    if (it == by_id.end() || it->second->set.proposals.empty()) {
      fail(ErrorCode::kSelectionImpossible, "no proposals for image '" + rec.image_id + "'");
    }
    const MaskProposal gt = rle_decode(rec.gt, MaskSource::kGroundTruth);
    int best = 0;
    Overlap best_overlap;
    double best_iou = -1.0;
    const auto& props = it->second->set.proposals;
    for (std::size_t i = 0; i < props.size(); ++i) {
      const Overlap o = overlap(props[i], gt);
      if (o.iou() > best_iou) {
        best_iou = o.iou();
        best = static_cast<int>(i);
        best_overlap = o;
      }
    }
    ub.best_index.push_back(best);
    ub.overlaps.push_back(best_overlap);
  }
  ub.oiou = overall_iou(ub.overlaps);
  ub.miou = mean_iou(ub.overlaps);
  return ub;
}

GtInventory inventory_from_instances(const std::vector<InstanceImage>& images) {
  GtInventory inv;
  for (const InstanceImage& img : images) {
    auto& list = inv[img.id];
    for (const InstanceMask& m : img.instances) {
      list.push_back({m.object_class, rle_decode(m.mask, MaskSource::kGroundTruth)});
    }
  }
  return inv;
}

GtInventory inventory_from_records(const std::vector<EvalRecord>& records) {
  GtInventory inv;
  for (const EvalRecord& rec : records) {
    if (!rec.object_class) continue;
    MaskProposal gt = rle_decode(rec.gt, MaskSource::kGroundTruth);
    auto& list = inv[rec.image_id];
    bool seen = false;
    for (const ClassedMask& m : list) seen = seen || m.mask == gt;
    if (!seen) list.push_back({*rec.object_class, std::move(gt)});
  }
  return inv;
}

MaskClassMetrics mask_class_metrics(const std::vector<EvalRecord>& records,
                                    const std::vector<std::optional<MaskProposal>>& predictions,
                                    const GtInventory& inventory) {
  if (records.size() != predictions.size()) {
    fail(ErrorCode::kInvalidArgument, "one prediction slot per record is required");
  }
  MaskClassMetrics out;
  std::vector<Overlap> correct_overlaps;
  for (std::size_t r = 0; r < records.size(); ++r) {
    const EvalRecord& rec = records[r];
    if (!rec.object_class) continue;
    ++out.considered;
    if (!predictions[r]) continue;
    auto it = inventory.find(rec.image_id);
    if (it == inventory.end()) continue;
    std::vector<MaskProposal> masks;
    for (const ClassedMask& m : it->second) masks.push_back(m.mask);
    const int owner = best_overlap_index(*predictions[r], masks);
    if (owner < 0 || it->second[static_cast<std::size_t>(owner)].object_class != *rec.object_class) {
      continue;
    }
    ++out.correct;
    correct_overlaps.push_back(
        overlap(*predictions[r], rle_decode(rec.gt, MaskSource::kGroundTruth)));
  }
  out.mc_acc = out.considered ? static_cast<double>(out.correct) / out.considered : 0.0;
  out.cc_oiou = overall_iou(correct_overlaps);
  return out;
}

}  // namespace gk
