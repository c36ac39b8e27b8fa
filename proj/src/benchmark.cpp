#include "grounding_kit/benchmark.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "grounding_kit/atomic_file.hpp"
#include "grounding_kit/image_ops.hpp"
#include "grounding_kit/parallel.hpp"

namespace gk {

using nlohmann::json;

namespace {

std::string query_mode_name(QueryMode mode) {
  return mode == QueryMode::kInMaskMean ? "in-mask" : "full-grid";
}

QueryMode parse_query_mode(const std::string& name) {
  if (name == "in-mask") return QueryMode::kInMaskMean;
  if (name == "full-grid") return QueryMode::kFullGridMean;
  fail(ErrorCode::kSchemaError, "query-mode must be in-mask or full-grid, got '" + name + "'");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json overlap_json(const Overlap& o) { return {o.intersection, o.union_area}; }

Overlap overlap_from(const json& j) {
  return Overlap{j.at(0).get<std::uint64_t>(), j.at(1).get<std::uint64_t>()};
}

}  // namespace

// ---------------------------------------------------------------------------
// Serialization

json BenchmarkSettings::to_json() const {
  return {{"alpha", weights.alpha},
          {"beta", weights.beta},
          {"mask_layers", visual.masking.k},
          {"reapply_per_layer", visual.masking.reapply_per_layer},
          {"query_mode", query_mode_name(visual.query_mode)},
          {"baseline", baseline ? baseline_name(*baseline) : "none"},
          {"upper_bound", upper_bound},
          {"class_metrics", class_metrics}};
}

json ExampleRow::to_json() const {
  json j = {{"id", id},
            {"image_id", image_id},
            {"chosen", chosen},
            {"score", optional_number(score)},
            {"iou", failed() ? 0.0 : overlap.iou()},
            {"overlap", overlap_json(overlap)}};
  j["class_match"] = class_match ? json(*class_match) : json(nullptr);
  j["upper_bound"] = upper_bound ? overlap_json(*upper_bound) : json(nullptr);
  if (error) j["error"] = *error;
  return j;
}

ExampleRow ExampleRow::from_json(const json& j) {
  ExampleRow row;
  row.id = j.at("id").get<std::string>();
  row.image_id = j.value("image_id", "");
  row.chosen = j.at("chosen").get<int>();
  row.score = number_or_null(j, "score");
  row.overlap = overlap_from(j.at("overlap"));
  if (j.contains("class_match") && !j.at("class_match").is_null()) {
    row.class_match = j.at("class_match").get<bool>();
  }
  if (j.contains("upper_bound") && !j.at("upper_bound").is_null()) {
    row.upper_bound = overlap_from(j.at("upper_bound"));
  }
  if (j.contains("error")) row.error = j.at("error").get<std::string>();
  return row;
}

json BenchmarkSummary::to_json() const {
  return {{"oiou", oiou},
          {"miou", miou},
          {"mc_acc", optional_number(mc_acc)},
          {"cc_oiou", optional_number(cc_oiou)},
          {"upper_bound_oiou", optional_number(upper_bound_oiou)},
          {"upper_bound_miou", optional_number(upper_bound_miou)},
          {"examples", examples},
          {"failures", failures}};
}

BenchmarkSummary summarize(const std::vector<ExampleRow>& rows) {
  BenchmarkSummary s;
  s.examples = static_cast<int>(rows.size());
  std::vector<Overlap> all, succeeded, class_correct, bound, bound_present;
  int classed = 0, matched = 0;
  for (const ExampleRow& row : rows) {
    all.push_back(row.overlap);
    if (row.failed()) {
      ++s.failures;
    } else {
      succeeded.push_back(row.overlap);
    }
    if (row.class_match) {
      ++classed;
      if (*row.class_match) {
        ++matched;
        class_correct.push_back(row.overlap);
      }
    }
    if (row.upper_bound) {
      bound.push_back(*row.upper_bound);
      bound_present.push_back(*row.upper_bound);
    } else {
      // No proposals: the oracle cannot recover this example either.
      bound.push_back(Overlap{0, row.overlap.union_area});
    }
  }
  s.oiou = overall_iou(all);
  s.miou = mean_iou(succeeded);
  if (classed > 0) {
    s.mc_acc = static_cast<double>(matched) / classed;
    s.cc_oiou = overall_iou(class_correct);
  }
  if (!bound_present.empty()) {
    s.upper_bound_oiou = overall_iou(bound);
    s.upper_bound_miou = mean_iou(bound_present);
  }
  return s;
}

json BenchmarkReport::to_json() const {
  json examples = json::array();
  for (const ExampleRow& row : rows) examples.push_back(row.to_json());
  return {{"config", config}, {"examples", examples}, {"summary", summary.to_json()}};
}

std::string BenchmarkReport::dump() const { return to_json().dump(2) + "\n"; }

void write_report(const std::filesystem::path& path, const BenchmarkReport& report) {
  write_file_atomically(path, report.dump());
}

// ---------------------------------------------------------------------------
// Runner

struct BenchmarkRunner::Prepared {
  struct ProposalFeatures {
    std::optional<EmbeddingVector> global;
    std::optional<EmbeddingVector> local;
  };
  struct Group {
    std::string image_id;
    std::vector<std::size_t> records;
    const ProposalImage* proposals = nullptr;
    std::optional<std::string> error;
    std::vector<ProposalFeatures> features;
  };
  struct Record {
    std::optional<MaskProposal> gt;
    std::optional<EmbeddingVector> global_text;
    std::optional<EmbeddingVector> local_text;
    bool whole_sentence = false;
    std::optional<std::string> text_error;  // matters only when beta < 1
    std::optional<std::string> error;
    std::optional<Overlap> upper_bound;
    std::size_t group = 0;
  };

  std::vector<Group> groups;
  std::vector<Record> records;
  std::optional<GtInventory> inventory;
};

BenchmarkRunner::BenchmarkRunner(const BenchmarkData& data, const VisualEncoder& visual,
                                 const TextEncoder& text, BenchmarkSettings settings,
                                 std::optional<FeatureCache> cache, json encoder_config)
    : data_(data),
      visual_(visual),
      text_(text),
      settings_(std::move(settings)),
      cache_(std::move(cache)),
      encoder_config_(std::move(encoder_config)) {
  settings_.weights.validate();
  if (visual_.info().embed_dim != text_.info().embed_dim) {
    fail(ErrorCode::kDimensionMismatch, "visual and text encoders disagree on embed dim");
  }
  if (!data_.image_source) fail(ErrorCode::kInvalidArgument, "benchmark data has no image source");
}

BenchmarkRunner::~BenchmarkRunner() = default;

void BenchmarkRunner::prepare() {
  auto p = std::make_unique<Prepared>();
  const auto by_id = index_by_id(data_.proposals);

  std::map<std::string, std::size_t> group_index;
  p->records.resize(data_.records.size());
  for (std::size_t r = 0; r < data_.records.size(); ++r) {
    const EvalRecord& rec = data_.records[r];
    auto [it, inserted] = group_index.emplace(rec.image_id, p->groups.size());
    if (inserted) {
      Prepared::Group g;
      g.image_id = rec.image_id;
      if (auto pit = by_id.find(rec.image_id); pit != by_id.end()) g.proposals = pit->second;
      p->groups.push_back(std::move(g));
    }
    p->groups[it->second].records.push_back(r);
    Prepared::Record& pr = p->records[r];
    pr.group = it->second;
    try {
      pr.gt = rle_decode(rec.gt, MaskSource::kGroundTruth);
      const Expression expr(rec.expression);
      pr.global_text = global_text_feature(text_, expr);
      auto parse = data_.parses.find(rec.expression);
      if (parse == data_.parses.end()) {
        pr.text_error = "no parse tree for expression \"" + rec.expression + "\"";
      } else {
        const NounPhrase np = extract_target_np(parse->second, expr);
        pr.whole_sentence = np.is_whole_sentence;
        pr.local_text = np.is_whole_sentence ? *pr.global_text : local_text_feature(text_, np);
      }
    } catch (const Error& e) {
      if (pr.gt && pr.global_text) {
        pr.text_error = e.what();
      } else {
        pr.error = e.what();
      }
    }
  }

  const bool need_features = !settings_.baseline.has_value();
  const int threads =
      effective_threads(settings_.threads, visual_.concurrent_safe() && text_.concurrent_safe());
  parallel_for(p->groups.size(), threads, [&](std::size_t gi) {
    Prepared::Group& g = p->groups[gi];
    if (!g.proposals || g.proposals->set.proposals.empty()) {
      g.error = "no proposals for image '" + g.image_id + "'";
      return;
    }
    const auto& props = g.proposals->set.proposals;
    for (std::size_t r : g.records) {
      Prepared::Record& pr = p->records[r];
      if (!pr.gt) continue;
      if (pr.gt->height() != g.proposals->height || pr.gt->width() != g.proposals->width) {
        pr.error = "ground truth " + std::to_string(pr.gt->height()) + "x" +
                   std::to_string(pr.gt->width()) + " does not match the proposals";
        continue;
      }
      if (settings_.upper_bound) {
        Overlap best;
        double best_iou = -1.0;
        for (const MaskProposal& m : props) {
          const Overlap o = overlap(m, *pr.gt);
          if (o.iou() > best_iou) {
            best_iou = o.iou();
            best = o;
          }
        }
        pr.upper_bound = best;
      }
    }
    if (!need_features) return;
    try {
      const Image img = data_.image_source(data_.records[g.records.front()]);
      if (img.height() != g.proposals->height || img.width() != g.proposals->width) {
        fail(ErrorCode::kShapeMismatch, "image '" + g.image_id + "' is " +
                                            std::to_string(img.height()) + "x" +
                                            std::to_string(img.width()) +
                                            " but its proposals are " +
                                            std::to_string(g.proposals->height) + "x" +
                                            std::to_string(g.proposals->width));
      }
      const ImageContext ctx = cache_ ? cache_->context(visual_, img, settings_.visual)
                                      : ImageContext(visual_, img, settings_.visual);
      g.features.resize(props.size());
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i].empty()) continue;
        g.features[i].global = ctx.global_feature(props[i]);
        g.features[i].local = ctx.local_feature(props[i]);
      }
    } catch (const Error& e) {
      g.error = e.what();
      g.features.clear();
    }
  });

  if (settings_.class_metrics) {
    if (data_.inventory) {
      p->inventory = data_.inventory;
    } else {
      bool any_class = false;
      for (const EvalRecord& rec : data_.records) any_class = any_class || rec.object_class;
      if (any_class) p->inventory = inventory_from_records(data_.records);
    }
  }
  prepared_ = std::move(p);
}

BenchmarkReport BenchmarkRunner::evaluate(const FusionWeights& weights) const {
  if (!prepared_) fail(ErrorCode::kInvalidArgument, "evaluate() called before prepare()");
  weights.validate();
  const Prepared& p = *prepared_;

  // Fused text feature per record, mirroring global_local_text_feature.
  std::vector<std::optional<EmbeddingVector>> text(p.records.size());
  std::vector<std::optional<std::string>> text_errors(p.records.size());
  for (std::size_t r = 0; r < p.records.size(); ++r) {
    const Prepared::Record& pr = p.records[r];
    if (!pr.global_text) continue;
    if (pr.local_text) {
      text[r] = pr.whole_sentence ? *pr.global_text
                                  : fuse(*pr.global_text, *pr.local_text, weights.beta);
    } else if (weights.beta == 1.0) {
      text[r] = *pr.global_text;
    } else {
      text_errors[r] = pr.text_error.value_or("no local textual feature");
    }
  }

  // Per-record score lists.
  std::vector<std::optional<std::vector<ScoredMask>>> scores(p.records.size());
  std::vector<std::optional<std::string>> score_errors(p.records.size());
  if (settings_.baseline) {
    const int threads = effective_threads(settings_.threads, visual_.concurrent_safe());
    parallel_for(p.groups.size(), threads, [&](std::size_t gi) {
      const Prepared::Group& g = p.groups[gi];
      if (g.error) return;
      std::optional<Image> img;
      for (std::size_t r : g.records) {
        if (!text[r] || p.records[r].error) continue;
        try {
          if (!img) img = data_.image_source(data_.records[r]);
          scores[r] = to_scored(
              baseline_scores(*settings_.baseline, visual_, *img, *text[r], g.proposals->set, 1));
        } catch (const Error& e) {
          score_errors[r] = e.what();
        }
      }
    });
  } else {
    for (std::size_t r = 0; r < p.records.size(); ++r) {
      const Prepared::Group& g = p.groups[p.records[r].group];
      if (g.error || !text[r] || p.records[r].error) continue;
      try {
        std::vector<ScoredMask> list(g.features.size());
        for (std::size_t i = 0; i < g.features.size(); ++i) {
          list[i].proposal_index = static_cast<int>(i);
          const auto& f = g.features[i];
          if (!f.global) {
            list[i].score = kEmptyProposalScore;
            list[i].empty_proposal = true;
            continue;
          }
          list[i].score = cosine(*text[r], fuse(*f.global, *f.local, weights.alpha));
          list[i].breakdown =
              ScoreBreakdown{cosine(*text[r], *f.global), cosine(*text[r], *f.local)};
        }
        scores[r] = std::move(list);
      } catch (const Error& e) {
        score_errors[r] = e.what();
      }
    }
  }

  BenchmarkReport report;
  BenchmarkSettings effective = settings_;
  effective.weights = weights;
  report.config = effective.to_json();
  report.config["inputs"] = data_.provenance;
  report.config["encoder"] = encoder_config_;

  for (std::size_t r = 0; r < p.records.size(); ++r) {
    const EvalRecord& rec = data_.records[r];
    const Prepared::Record& pr = p.records[r];
    const Prepared::Group& g = p.groups[pr.group];
    ExampleRow row;
    row.id = rec.image_id + "#" + std::to_string(r);
    row.image_id = rec.image_id;
    row.upper_bound = pr.upper_bound;
    const std::uint64_t gt_area = pr.gt ? pr.gt->area() : 0;
    row.overlap = Overlap{0, gt_area};

    if (pr.error) {
      row.error = pr.error;
    } else if (g.error) {
      row.error = g.error;
    } else if (text_errors[r]) {
      row.error = text_errors[r];
    } else if (score_errors[r]) {
      row.error = score_errors[r];
    } else if (!scores[r]) {
      row.error = "not scored";
    } else {
      try {
        const ScoredMask best = select_mask(*scores[r]);
        const MaskProposal& pred =
            g.proposals->set.proposals[static_cast<std::size_t>(best.proposal_index)];
        row.chosen = best.proposal_index;
        row.score = best.score;
        row.overlap = overlap(pred, *pr.gt);
        if (p.inventory && rec.object_class) {
          auto inv = p.inventory->find(rec.image_id);
          bool match = false;
          if (inv != p.inventory->end()) {
            std::vector<MaskProposal> masks;
            for (const ClassedMask& m : inv->second) masks.push_back(m.mask);
            const int owner = best_overlap_index(pred, masks);
            match = owner >= 0 &&
                    inv->second[static_cast<std::size_t>(owner)].object_class == *rec.object_class;
          }
          row.class_match = match;
        }
      } catch (const Error& e) {
        row.error = e.what();
      }
    }
    if (row.failed() && p.inventory && rec.object_class) row.class_match = false;
    report.rows.push_back(std::move(row));
  }
  report.summary = summarize(report.rows);
  return report;
}

BenchmarkReport BenchmarkRunner::run() {
  if (!prepared_) prepare();
  return evaluate(settings_.weights);
}

// ---------------------------------------------------------------------------
// File-driven jobs

BenchmarkSettings settings_from(const KeyValueConfig& cfg) {
  BenchmarkSettings s;
  s.weights.alpha = cfg.get_double("alpha", 0.95);
  s.weights.beta = cfg.get_double("beta", 0.5);
  s.weights.validate();
  s.visual.masking.k = cfg.get_int("mask-layers", 3);
  s.visual.masking.reapply_per_layer = cfg.get_bool("reapply-per-layer", true);
  s.visual.query_mode = parse_query_mode(cfg.get_or("query-mode", "in-mask"));
  const std::string baseline = cfg.get_or("baseline", "none");
  if (baseline != "none") s.baseline = parse_baseline(baseline);
  s.threads = cfg.get_int("threads", 1);
  s.upper_bound = cfg.get_bool("upper-bound", true);
  s.class_metrics = cfg.get_bool("class-metrics", true);
  return s;
}

namespace {

std::filesystem::path required_path(const KeyValueConfig& cfg, const char* key) {
  auto p = cfg.get_path(key);
  if (!p) fail(ErrorCode::kSchemaError, std::string("benchmark config lacks '") + key + "'");
  return *p;
}

}  // namespace

BenchmarkData load_benchmark_data(const KeyValueConfig& cfg) {
  BenchmarkData data;
  const auto records_path = required_path(cfg, "records");
  const auto proposals_path = required_path(cfg, "proposals");

  data.records = load_records(records_path);
  data.proposals = load_proposals(proposals_path);
  json inputs = {{"records", cfg.get_or("records", "")},
                 {"proposals", cfg.get_or("proposals", "")}};
  if (cfg.has("encoder")) inputs["encoder"] = cfg.get_or("encoder", "");
  if (auto parses = cfg.get_path("parses")) {
    data.parses = index_parses(load_parse_file(*parses));
    inputs["parses"] = cfg.get_or("parses", "");
  }
  if (auto instances = cfg.get_path("instances")) {
    data.inventory = inventory_from_instances(load_instances(*instances));
    inputs["instances"] = cfg.get_or("instances", "");
  }
  data.provenance = inputs;
  data.image_source = [records_path](const EvalRecord& rec) {
    Image img = load_image(resolve_against(records_path, rec.image_path));
    img.set_id(rec.image_id);
    return img;
  };
  return data;
}

BenchmarkJob load_benchmark_job(const KeyValueConfig& cfg) {
  BenchmarkJob job;
  job.settings = settings_from(cfg);
  const auto encoder_path = required_path(cfg, "encoder");
  job.data = load_benchmark_data(cfg);

  KeyValueConfig encoder_cfg = KeyValueConfig::load(encoder_path);
  if (auto seed = cfg.get("seed")) encoder_cfg.set("seed", *seed);
  job.encoders = make_encoders(encoder_cfg);
  if (auto out = cfg.get_path("out")) job.out = *out;
  return job;
}

namespace {

json encoder_json(const EncoderPair& pair) {
  json j = json::object();
  for (const auto& [k, v] : pair.resolved.entries()) j[k] = v;
  return j;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkJob& job) {
  BenchmarkRunner runner(job.data, *job.encoders.visual, *job.encoders.text, job.settings,
                         FeatureCache::from_env(), encoder_json(job.encoders));
  return runner.run();
}

// ---------------------------------------------------------------------------
// Ablation

std::string SweepSpec::axis_name() const {
  switch (axis) {
    case Axis::kAlpha: return "alpha";
    case Axis::kBeta: return "beta";
    case Axis::kMaskLayers: return "k";
  }
  return "?";
}

SweepSpec parse_sweep(const std::string& spec, int layer_count) {
  SweepSpec s;
  const auto colon = spec.find(':');
  const std::string axis = spec.substr(0, colon);
  if (axis == "alpha") {
    s.axis = SweepSpec::Axis::kAlpha;
  } else if (axis == "beta") {
    s.axis = SweepSpec::Axis::kBeta;
  } else if (axis == "k" || axis == "mask-layers") {
    s.axis = SweepSpec::Axis::kMaskLayers;
  } else {
    fail(ErrorCode::kSchemaError, "sweep axis must be alpha, beta or k, got '" + axis + "'");
  }
  if (colon != std::string::npos) {
    std::stringstream in(spec.substr(colon + 1));
    for (std::string item; std::getline(in, item, ',');) {
      try {
        s.values.push_back(std::stod(item));
      } catch (const std::exception&) {
        fail(ErrorCode::kSchemaError, "bad sweep value '" + item + "'");
      }
    }
    if (s.values.empty()) fail(ErrorCode::kSchemaError, "sweep lists no values");
    return s;
  }
  if (s.axis == SweepSpec::Axis::kMaskLayers) {
    if (layer_count < 1) {
      fail(ErrorCode::kInvalidArgument, "a k sweep needs a patch-transformer encoder");
    }
    for (int k = 0; k <= layer_count; ++k) s.values.push_back(k);
  } else {
    for (int i = 0; i <= 20; ++i) s.values.push_back(i / 20.0);
  }
  return s;
}

std::vector<AblationRow> run_ablation(const BenchmarkJob& job, const SweepSpec& sweep) {
  std::vector<AblationRow> rows;
  const auto cache = FeatureCache::from_env();
  const json enc = encoder_json(job.encoders);
  if (sweep.axis == SweepSpec::Axis::kMaskLayers) {
    for (double v : sweep.values) {
      BenchmarkSettings s = job.settings;
      s.visual.masking.k = static_cast<int>(std::lround(v));
      BenchmarkRunner runner(job.data, *job.encoders.visual, *job.encoders.text, s, cache, enc);
      rows.push_back({v, runner.run().summary});
    }
    return rows;
  }
  BenchmarkRunner runner(job.data, *job.encoders.visual, *job.encoders.text, job.settings, cache,
                         enc);
  runner.prepare();
  for (double v : sweep.values) {
    FusionWeights w = job.settings.weights;
    (sweep.axis == SweepSpec::Axis::kAlpha ? w.alpha : w.beta) = v;
    rows.push_back({v, runner.evaluate(w).summary});
  }
  return rows;
}

namespace {

std::string fmt_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v) { return v ? fmt_number(*v) : ""; }

}  // namespace

std::string ablation_csv(const SweepSpec& sweep, const std::vector<AblationRow>& rows) {
  std::string out =
      sweep.axis_name() + ",oiou,miou,mc_acc,cc_oiou,upper_bound_oiou,examples,failures\n";
  for (const AblationRow& r : rows) {
    out += fmt_number(r.value) + "," + fmt_number(r.summary.oiou) + "," +
           fmt_number(r.summary.miou) + "," + fmt_optional(r.summary.mc_acc) + "," +
           fmt_optional(r.summary.cc_oiou) + "," + fmt_optional(r.summary.upper_bound_oiou) +
           "," + std::to_string(r.summary.examples) + "," + std::to_string(r.summary.failures) +
           "\n";
  }
  return out;
}

std::string ablation_svg(const SweepSpec& sweep, const std::vector<AblationRow>& rows) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 30, kBottom = 50;
  double x_min = 0, x_max = 1;
  if (!rows.empty()) {
    x_min = x_max = rows.front().value;
    for (const auto& r : rows) {
      x_min = std::min(x_min, r.value);
      x_max = std::max(x_max, r.value);
    }
  }
  if (x_max == x_min) x_max = x_min + 1;
  double y_max = 0.0;
  for (const auto& r : rows) y_max = std::max({y_max, r.summary.oiou, r.summary.miou});
  y_max = y_max > 0 ? std::min(1.0, std::ceil(y_max * 10.0 + 0.5) / 10.0) : 1.0;

  auto px = [&](double x) { return kLeft + (x - x_min) / (x_max - x_min) * (kW - kLeft - kRight); };
  auto py = [&](double y) { return kH - kBottom - y / y_max * (kH - kTop - kBottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kW - kRight << "\" y2=\""
      << py(0) << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kLeft << "\" y2=\""
      << py(y_max) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y_max * i / 5.0;
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << fmt_number(std::round(y * 1000) / 1000) << "</text>\n";
    const double x = x_min + (x_max - x_min) * i / 5.0;
    svg << "<text x=\"" << px(x) << "\" y=\"" << py(0) + 18 << "\" text-anchor=\"middle\">"
        << fmt_number(std::round(x * 1000) / 1000) << "</text>\n";
  }
  svg << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 12
      << "\" text-anchor=\"middle\">" << sweep.axis_name() << "</text>\n";

  const struct {
    const char* name;
    const char* color;
    double BenchmarkSummary::*field;
  } series[] = {{"oIoU", "#1f77b4", &BenchmarkSummary::oiou},
                {"mIoU", "#d62728", &BenchmarkSummary::miou}};
  int legend = 0;
  for (const auto& s : series) {
    svg << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) svg << px(r.value) << "," << py(r.summary.*s.field) << " ";
    svg << "\"/>\n";
    for (const auto& r : rows) {
      svg << "<circle cx=\"" << px(r.value) << "\" cy=\"" << py(r.summary.*s.field)
          << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    }
    svg << "<text x=\"" << kW - kRight - 80 << "\" y=\"" << kTop + 14 * legend << "\" fill=\""
        << s.color << "\">" << s.name << "</text>\n";
    ++legend;
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace gk
