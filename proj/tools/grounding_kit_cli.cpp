// grounding-kit: command-line front end for proposal scoring, benchmark runs,
// ablation sweeps, noun-phrase inspection and upper-bound computation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "grounding_kit/benchmark.hpp"
#include "grounding_kit/image_ops.hpp"
#include "grounding_kit/atomic_file.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kSchema = 2, kEncoder = 3, kSelection = 4 };

int exit_code_for(gk::ErrorCode code) {
  switch (code) {
    case gk::ErrorCode::kSchemaError:
    case gk::ErrorCode::kMalformedRle:
    case gk::ErrorCode::kMalformedParse:
    case gk::ErrorCode::kShapeMismatch:
    case gk::ErrorCode::kIoError:
    case gk::ErrorCode::kInvalidArgument:
    case gk::ErrorCode::kWeightOutOfRange:
      return kSchema;
    case gk::ErrorCode::kEncoderFailure:
    case gk::ErrorCode::kGradientsUnsupported:
    case gk::ErrorCode::kSurgeryUnsupported:
    case gk::ErrorCode::kDimensionMismatch:
      return kEncoder;
    case gk::ErrorCode::kSelectionImpossible:
      return kSelection;
    default:
      return kFailure;
  }
}

// Flags shared by segment/bench/ablate. Unset flags leave config values alone.
struct CommonFlags {
  std::optional<double> alpha, beta;
  std::optional<int> mask_layers, threads;
  std::optional<std::string> encoder, baseline, records, proposals, parses, instances, seed, out;

  void add_to(CLI::App& cmd, bool dataset_flags) {
    cmd.add_option("--alpha", alpha, "visual fusion weight (default 0.95)");
    cmd.add_option("--beta", beta, "text fusion weight (default 0.5)");
    cmd.add_option("--mask-layers", mask_layers, "masked transformer layers k (default 3)");
    cmd.add_option("--encoder", encoder, "encoder config file");
    cmd.add_option("--baseline", baseline, "none|grad-cam|score-map|region-token|cropping");
    cmd.add_option("--parses", parses, "parse file (expression -> dependency parse)");
    cmd.add_option("--seed", seed, "override the encoder seed");
    cmd.add_option("--threads", threads, "worker threads");
    cmd.add_option("--out", out, "output location");
    if (dataset_flags) {
      cmd.add_option("--records", records, "evaluation records file");
      cmd.add_option("--proposals", proposals, "mask proposals file");
      cmd.add_option("--instances", instances, "per-image classed GT instances file");
    }
  }

  // Flag paths are relative to the working directory, config paths to the
  // config file, so flag paths are made absolute before merging.
  void apply(gk::KeyValueConfig& cfg) const {
    auto num = [](double v) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      return std::string(buf);
    };
    auto path = [](const std::string& p) { return fs::absolute(p).lexically_normal().string(); };
    if (alpha) cfg.set("alpha", num(*alpha));
    if (beta) cfg.set("beta", num(*beta));
    if (mask_layers) cfg.set("mask-layers", std::to_string(*mask_layers));
    if (threads) cfg.set("threads", std::to_string(*threads));
    if (encoder) cfg.set("encoder", path(*encoder));
    if (baseline) cfg.set("baseline", *baseline);
    if (records) cfg.set("records", path(*records));
    if (proposals) cfg.set("proposals", path(*proposals));
    if (parses) cfg.set("parses", path(*parses));
    if (instances) cfg.set("instances", path(*instances));
    if (seed) cfg.set("seed", *seed);
    if (out) cfg.set("out", path(*out));
  }
};

gk::KeyValueConfig load_config(const std::optional<std::string>& path) {
  return path ? gk::KeyValueConfig::load(*path) : gk::KeyValueConfig{};
}

// ---------------------------------------------------------------------------
// segment

struct SegmentArgs {
  std::string image, expression, proposals;
  std::optional<std::string> image_id, config;
  CommonFlags flags;
};

gk::EncoderPair encoders_for(const gk::KeyValueConfig& cfg) {
  gk::KeyValueConfig enc = cfg.get_path("encoder") ? gk::KeyValueConfig::load(*cfg.get_path("encoder"))
                                                   : gk::KeyValueConfig::parse("kind=mock-transformer");
  if (auto seed = cfg.get("seed")) enc.set("seed", *seed);
  return gk::make_encoders(enc);
}

const gk::ProposalImage& pick_proposals(const std::vector<gk::ProposalImage>& images,
                                        const std::optional<std::string>& image_id,
                                        const fs::path& image_path) {
  const std::string wanted = image_id.value_or(image_path.stem().string());
  for (const auto& img : images) {
    if (img.id == wanted) return img;
  }
  if (!image_id && images.size() == 1) return images.front();
  gk::fail(gk::ErrorCode::kSchemaError,
           "proposals file has no entry for image '" + wanted + "'; pass --image-id");
}

int cmd_segment(const SegmentArgs& args) {
  gk::KeyValueConfig cfg = load_config(args.config);
  args.flags.apply(cfg);
  const gk::BenchmarkSettings settings = gk::settings_from(cfg);
  const gk::EncoderPair encoders = encoders_for(cfg);

  if (!fs::exists(args.proposals)) {
    gk::fail(gk::ErrorCode::kSchemaError, "proposals file not found: " + args.proposals);
  }
  const auto images = gk::load_proposals(args.proposals);
  const gk::ProposalImage& entry = pick_proposals(images, args.image_id, args.image);
  const gk::Image img = gk::load_image(args.image);
  entry.set.validate(img.height(), img.width());

  const gk::Expression expr(args.expression);
  std::optional<gk::TextFeatures> text;
  if (auto parse_path = cfg.get_path("parses")) {
    const auto parses = gk::index_parses(gk::load_parse_file(*parse_path));
    if (auto it = parses.find(args.expression); it != parses.end()) {
      text = gk::global_local_text_feature(*encoders.text, expr, it->second, settings.weights.beta);
    }
  }
  if (!text && settings.weights.beta != 1.0) {
    gk::fail(gk::ErrorCode::kSchemaError,
             "no parse tree for \"" + args.expression + "\"; pass --parses or use --beta 1");
  }
  const gk::EmbeddingVector t =
      text ? text->fused : gk::global_text_feature(*encoders.text, expr);

  const int threads = std::max(1, settings.threads);
  std::vector<gk::ScoredMask> scored;
  if (settings.baseline) {
    scored = gk::to_scored(
        gk::baseline_scores(*settings.baseline, *encoders.visual, img, t, entry.set, threads));
  } else {
    const auto cache = gk::FeatureCache::from_env();
    const gk::ImageContext ctx = cache ? cache->context(*encoders.visual, img, settings.visual)
                                       : gk::ImageContext(*encoders.visual, img, settings.visual);
    scored = gk::score_with_context(ctx, entry.set, t, settings.weights.alpha, threads);
  }
  const gk::ScoredMask best = gk::select_mask(scored);

  std::vector<gk::ScoredMask> ranked = scored;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.score > b.score; });
  json ranking = json::array();
  for (const auto& s : ranked) {
    json row = {{"index", s.proposal_index},
                {"score", s.empty_proposal ? json(nullptr) : json(s.score)}};
    if (s.breakdown) {
      row["global"] = s.breakdown->global;
      row["local"] = s.breakdown->local;
    }
    if (s.empty_proposal) row["empty"] = true;
    ranking.push_back(row);
  }
  json config = settings.to_json();
  json enc = json::object();
  for (const auto& [k, v] : encoders.resolved.entries()) enc[k] = v;
  config["encoder"] = enc;
  json doc = {{"config", config},
              {"image_id", entry.id},
              {"expression", args.expression},
              {"chosen", best.proposal_index},
              {"score", best.score},
              {"scores", ranking}};
  if (text) {
    doc["target_np"] = {{"text", text->np.text},
                        {"is_whole_sentence", text->np.is_whole_sentence}};
  }

  const fs::path out_dir = cfg.get_path("out").value_or(fs::path("."));
  const auto& chosen = entry.set.proposals[static_cast<std::size_t>(best.proposal_index)];
  gk::save_image(gk::overlay_mask(img, chosen), out_dir / "overlay.png");
  gk::write_file_atomically(out_dir / "scores.json", doc.dump(2) + "\n");
  std::cout << "chosen proposal " << best.proposal_index << " (score " << best.score << ")\n"
            << "wrote " << (out_dir / "overlay.png").string() << " and "
            << (out_dir / "scores.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// bench / ablate

void print_summary(const gk::BenchmarkSummary& s) {
  std::printf("examples %d  failures %d\n", s.examples, s.failures);
  std::printf("oIoU %.4f  mIoU %.4f\n", s.oiou, s.miou);
  if (s.mc_acc) std::printf("MC-ACC %.4f  CC-oIoU %.4f\n", *s.mc_acc, s.cc_oiou.value_or(0.0));
  if (s.upper_bound_oiou) {
    std::printf("upper bound oIoU %.4f  mIoU %.4f\n", *s.upper_bound_oiou,
                s.upper_bound_miou.value_or(0.0));
  }
}

int cmd_bench(const std::string& config, const CommonFlags& flags) {
  gk::KeyValueConfig cfg = gk::KeyValueConfig::load(config);
  flags.apply(cfg);
  const gk::BenchmarkJob job = gk::load_benchmark_job(cfg);
  const gk::BenchmarkReport report = gk::run_benchmark(job);
  if (job.out) {
    gk::write_report(*job.out, report);
    print_summary(report.summary);
    std::cout << "wrote " << job.out->string() << "\n";
  } else {
    std::cout << report.dump();
  }
  return kOk;
}

int cmd_ablate(const std::string& config, const std::string& sweep_spec, const CommonFlags& flags) {
  gk::KeyValueConfig cfg = gk::KeyValueConfig::load(config);
  flags.apply(cfg);
  gk::BenchmarkJob job = gk::load_benchmark_job(cfg);
  const auto* transformer =
      dynamic_cast<const gk::TransformerEncoder*>(job.encoders.visual.get());
  const gk::SweepSpec sweep =
      gk::parse_sweep(sweep_spec, transformer ? transformer->layer_count() : 0);
  if (sweep.axis == gk::SweepSpec::Axis::kMaskLayers && !transformer) {
    gk::fail(gk::ErrorCode::kInvalidArgument, "a k sweep needs a patch-transformer encoder");
  }
  const auto rows = gk::run_ablation(job, sweep);
  const fs::path prefix =
      job.out.value_or(fs::path("ablation_" + sweep.axis_name())).replace_extension();
  const fs::path csv = fs::path(prefix.string() + ".csv");
  const fs::path svg = fs::path(prefix.string() + ".svg");
  gk::write_file_atomically(csv, gk::ablation_csv(sweep, rows));
  gk::write_file_atomically(svg, gk::ablation_svg(sweep, rows));
  std::cout << gk::ablation_csv(sweep, rows) << "wrote " << csv.string() << " and "
            << svg.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// np / upper-bound

int cmd_np(const std::string& parse_file, bool as_json) {
  const auto entries = gk::load_parse_file(parse_file);
  json rows = json::array();
  int whole = 0;
  for (const auto& e : entries) {
    const gk::NounPhrase np = gk::extract_target_np(e.parse, gk::Expression(e.expression));
    whole += np.is_whole_sentence ? 1 : 0;
    rows.push_back({{"expression", e.expression},
                    {"target_np", np.text},
                    {"is_whole_sentence", np.is_whole_sentence}});
  }
  const double pct = entries.empty() ? 0.0 : 100.0 * whole / static_cast<double>(entries.size());
  if (as_json) {
    std::cout << json{{"rows", rows},
                      {"whole_sentence", whole},
                      {"total", entries.size()},
                      {"whole_sentence_percent", pct}}
                     .dump(2)
              << "\n";
    return kOk;
  }
  std::size_t width = 10;
  for (const auto& r : rows) width = std::max(width, r["expression"].get<std::string>().size());
  width = std::min<std::size_t>(width, 60);
  std::printf("%-*s  %-30s  %s\n", static_cast<int>(width), "expression", "target NP", "whole");
  for (const auto& r : rows) {
    std::printf("%-*s  %-30s  %s\n", static_cast<int>(width),
                r["expression"].get<std::string>().c_str(), r["target_np"].get<std::string>().c_str(),
                r["is_whole_sentence"].get<bool>() ? "yes" : "no");
  }
  std::printf("whole-sentence fallback: %d/%zu (%.2f%%)\n", whole, entries.size(), pct);
  return kOk;
}

int cmd_upper_bound(const std::string& records, const std::string& proposals) {
  const auto ub = gk::proposal_upper_bound(gk::load_records(records), gk::load_proposals(proposals));
  std::cout << json{{"upper_bound_oiou", ub.oiou},
                    {"upper_bound_miou", ub.miou},
                    {"examples", ub.overlaps.size()},
                    {"best_index", ub.best_index}}
                   .dump(2)
            << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot referring segmentation by scoring mask proposals"};
  app.require_subcommand(1);
  // A repeated flag overrides the earlier one, so wrappers can append overrides.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  SegmentArgs seg;
  auto* segment = app.add_subcommand("segment", "score proposals for one image and expression");
  segment->add_option("--image", seg.image, "input image (.png or .ppm)")->required();
  segment->add_option("--expression", seg.expression, "referring expression")->required();
  segment->add_option("--proposals", seg.proposals, "mask proposals file")->required();
  segment->add_option("--image-id", seg.image_id, "proposal entry id (default: image file stem)");
  segment->add_option("--config", seg.config, "key-value config supplying defaults");
  seg.flags.add_to(*segment, false);

  std::string bench_config;
  CommonFlags bench_flags;
  auto* bench = app.add_subcommand("bench", "run a benchmark and write a JSON report");
  bench->add_option("config", bench_config, "benchmark config file")->required();
  bench_flags.add_to(*bench, true);

  std::string ablate_config, sweep = "alpha";
  CommonFlags ablate_flags;
  auto* ablate = app.add_subcommand("ablate", "sweep alpha, beta or k; write CSV and SVG");
  ablate->add_option("config", ablate_config, "benchmark config file")->required();
  ablate->add_option("--sweep", sweep, "alpha|beta|k, optionally ':v1,v2,...'");
  ablate_flags.add_to(*ablate, true);

  std::string parse_file;
  bool np_json = false;
  auto* np = app.add_subcommand("np", "show the target noun phrase of each parsed expression");
  np->add_option("parses", parse_file, "parse file")->required();
  np->add_flag("--json", np_json, "emit JSON instead of a table");

  std::string ub_records, ub_proposals;
  auto* upper = app.add_subcommand("upper-bound", "oIoU/mIoU of the best proposal per record");
  upper->add_option("--records", ub_records, "evaluation records file")->required();
  upper->add_option("--proposals", ub_proposals, "mask proposals file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kSchema;
  }

  try {
    if (*segment) return cmd_segment(seg);
    if (*bench) return cmd_bench(bench_config, bench_flags);
    if (*ablate) return cmd_ablate(ablate_config, sweep, ablate_flags);
    if (*np) return cmd_np(parse_file, np_json);
    if (*upper) return cmd_upper_bound(ub_records, ub_proposals);
  } catch (const gk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
