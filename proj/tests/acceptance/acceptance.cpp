// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// if any gating criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "grounding_kit/benchmark.hpp"
#include "synthetic.hpp"

using namespace gk;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail = what;
    pass = pass && ok;
  }
};

double max_abs_diff(const EmbeddingVector& a, const EmbeddingVector& b) {
  double d = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double max_rel_diff(const EmbeddingVector& a, const EmbeddingVector& b) {
  double scale = 0;
  for (std::size_t i = 0; i < b.dim(); ++i) scale = std::max(scale, std::abs(b[i]));
  return max_abs_diff(a, b) / scale;
}

EncoderPair mock(const std::string& kind, std::uint64_t seed) {
  return make_encoders(KeyValueConfig::parse("kind = " + kind + "\nseed = " + std::to_string(seed)));
}

MaskProposal nonempty_mask(std::mt19937_64& rng, int h, int w, double density) {
  for (;;) {
    MaskProposal m = testing::random_mask(rng, h, w, density);
    if (!m.empty() && m.area() < static_cast<std::size_t>(h) * w) return m;
  }
}

// Rectangular random mask; produces grid masks with real out-of-mask cells.
MaskProposal random_box(std::mt19937_64& rng, int h, int w) {
  std::uniform_int_distribution<int> rr(0, h - 1), cc(0, w - 1);
  int r0 = rr(rng), r1 = rr(rng), c0 = cc(rng), c1 = cc(rng);
  if (r0 > r1) std::swap(r0, r1);
  if (c0 > c1) std::swap(c0, c1);
  MaskProposal m(h, w);
  for (int r = r0; r <= std::min(r1, r0 + h / 2); ++r) {
    for (int c = c0; c <= std::min(c1, c0 + w / 2); ++c) m.set(r, c, true);
  }
  return m;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome identity_reductions() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0;
  for (const char* kind : {"mock-residual", "mock-transformer"}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto enc = mock(kind, 1000 + trial);
      const Image img = testing::random_image(rng, 30 + trial * 7, 41);
      const auto full = MaskProposal::full(img.height(), img.width());
      const double d = max_rel_diff(global_visual_feature(*enc.visual, img, full, {}),
                                    enc.visual->encode_image(img));
      worst = std::max(worst, d);
      o.require(d <= 1e-5, std::string(kind) + " all-ones relative diff " + fmt("%.3g", d));
    }
  }
  const auto vit = mock("mock-transformer", 7);
  for (int trial = 0; trial < 5; ++trial) {
    const Image img = testing::random_image(rng, 36, 36);
    VisualContextConfig cfg;
    cfg.masking.k = 0;
    const bool exact = global_visual_feature(*vit.visual, img, nonempty_mask(rng, 36, 36, 0.3), cfg) ==
                       vit.visual->encode_image(img);
    o.require(exact, "k=0 differs from the vanilla forward");
  }
  if (o.pass) o.detail = "max all-ones rel diff " + fmt("%.2e", worst) + "; k=0 bit-exact";
  return o;
}

Outcome masking_independence() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::normal_distribution<double> noise(0.0, 5.0);
  int violations = 0;
  double worst = 0;

  // (a) residual path: out-of-mask backbone cells.
  for (int trial = 0; trial < 100; ++trial) {
    const auto enc = mock("mock-residual", 300 + trial % 10);
    const auto& res = dynamic_cast<const ResidualEncoder&>(*enc.visual);
    const Image img = testing::random_image(rng, 28, 35);
    const MaskProposal m = random_box(rng, 28, 35);
    const FeatureGrid grid = res.backbone_features(img);
    const GridMask gm = resize_mask_to_grid(m, grid.shape());
    FeatureGrid other = grid;
    for (int k = 0; k < grid.shape().cells(); ++k) {
      if (gm.at(k)) continue;
      for (int c = 0; c < grid.channels(); ++c) other.at(c, k) += noise(rng);
    }
    const QueryMode mode = trial % 2 ? QueryMode::kFullGridMean : QueryMode::kInMaskMean;
    const double d = max_abs_diff(masked_attention_pool(*res.pooling_weights(), grid, gm, mode),
                                  masked_attention_pool(*res.pooling_weights(), other, gm, mode));
    worst = std::max(worst, d);
    violations += d > 1e-9;
  }
  o.require(violations == 0, std::to_string(violations) + " residual violations");

  // (b) transformer path: out-of-mask tokens at every masking-layer input.
  int trials_b = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto enc = mock("mock-transformer", 400 + trial % 10);
    const auto& vit = dynamic_cast<const TransformerEncoder&>(*enc.visual);
    const Image img = testing::random_image(rng, 32, 32);
    const MaskProposal m = random_box(rng, 32, 32);
    const GridMask gm = resize_mask_to_grid(m, vit.info().grid);
    const int k = 1 + static_cast<int>(rng() % static_cast<unsigned>(vit.layer_count()));
    const TokenMaskingConfig cfg{k, true};
    const TokenState boundary = token_state_at_boundary(vit, img, k);
    const EmbeddingVector base = masked_transformer_suffix(vit, boundary, gm, cfg);
    for (int target = vit.layer_count() - k; target < vit.layer_count(); ++target) {
      const EmbeddingVector out =
          masked_transformer_suffix(vit, boundary, gm, cfg, [&](int layer, TokenState& s) {
            if (layer != target) return;
            for (int cell = 0; cell < s.grid.shape().cells(); ++cell) {
              if (gm.at(cell)) continue;
              for (int c = 0; c < s.grid.channels(); ++c) s.grid.at(c, cell) += noise(rng);
            }
          });
      const double d = max_abs_diff(out, base);
      worst = std::max(worst, d);
      violations += d > 1e-9;
      ++trials_b;
    }
  }
  o.require(violations == 0, std::to_string(violations) + " violations in total");
  if (o.pass) {
    o.detail = "200 trials (" + std::to_string(trials_b) + " layer perturbations), max diff " +
               fmt("%.2e", worst);
  }
  return o;
}

Outcome definitional_reductions() {
  Outcome o;
  double worst_crop = 0, worst_region = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    testing::SyntheticOptions opts;
    opts.seed = seed;
    const auto ds = testing::make_synthetic(opts);
    for (const char* kind : {"mock-residual", "mock-transformer"}) {
      const auto enc = mock(kind, seed);
      const Image& img = ds.images[0];
      const ProposalSet& props = ds.data.proposals[0].set;
      const EmbeddingVector t = enc.text->encode_text(ds.data.records[0].expression);
      const auto crop = cropping_scores(*enc.visual, img, t, props);
      const auto pipeline = score_with_context(ImageContext(*enc.visual, img, {}), props, t, 0.0);
      for (std::size_t i = 0; i < props.size(); ++i) {
        if (props.proposals[i].empty()) continue;
        worst_crop = std::max(worst_crop, std::abs(crop[i] - pipeline[i].score));
      }
      if (std::string(kind) == "mock-transformer") {
        const auto region = region_token_scores(*enc.visual, img, t, props);
        VisualContextConfig cfg;
        cfg.masking.k = dynamic_cast<const TransformerEncoder&>(*enc.visual).layer_count();
        const ImageContext ctx(*enc.visual, img, cfg);
        for (std::size_t i = 0; i < props.size(); ++i) {
          if (props.proposals[i].empty()) continue;
          worst_region = std::max(
              worst_region, std::abs(region[i] - cosine(t, ctx.global_feature(props.proposals[i]))));
        }
      }
    }
  }
  o.require(worst_crop <= 1e-9, "alpha=0 vs cropping diff " + fmt("%.3g", worst_crop));
  o.require(worst_region <= 1e-9, "region token vs k=L diff " + fmt("%.3g", worst_region));

  const auto enc = mock("mock-residual", 9);
  const ParseTree whole{{{0, "little", "ADJ", 1, "amod"}, {1, "girl", "NOUN", 1, "ROOT"}}, {{0, 2}}};
  const ParseTree no_chunk{{{0, "on", "ADP", 0, "ROOT"}, {1, "top", "NOUN", 0, "pobj"}}, {}};
  int exact = 0;
  for (const auto& [text, parse] : {std::pair{std::string("little girl"), whole},
                                    std::pair{std::string("on top"), no_chunk}}) {
    const Expression e(text);
    const EmbeddingVector tg = global_text_feature(*enc.text, e);
    for (int i = 0; i <= 10; ++i) {
      const auto f = global_local_text_feature(*enc.text, e, parse, i / 10.0);
      o.require(f.np.is_whole_sentence, "expected a whole-sentence phrase for '" + text + "'");
      exact += f.fused == tg;
    }
  }
  o.require(exact == 22, std::to_string(22 - exact) + " whole-sentence betas differ from t^G");
  if (o.pass) {
    o.detail = "cropping diff " + fmt("%.1e", worst_crop) + ", region-token diff " +
               fmt("%.1e", worst_region) + ", 11 betas x 2 phrases exact";
  }
  return o;
}

Outcome metric_oracles() {
  Outcome o;
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> density(0.05, 0.95);
  std::vector<MaskPair> pairs;
  std::uint64_t inter_sum = 0, union_sum = 0;
  double iou_sum = 0;
  int mismatches = 0;
  for (int i = 0; i < 200; ++i) {
    MaskProposal a = testing::random_mask(rng, 8, 8, density(rng));
    MaskProposal b = testing::random_mask(rng, 8, 8, density(rng));
    std::uint64_t inter = 0, uni = 0;
    for (int r = 0; r < 8; ++r) {
      for (int c = 0; c < 8; ++c) {
        inter += a.at(r, c) && b.at(r, c);
        uni += a.at(r, c) || b.at(r, c);
      }
    }
    const double expected = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    mismatches += iou(a, b) != expected;
    inter_sum += inter;
    union_sum += uni;
    iou_sum += expected;
    pairs.push_back({std::move(a), std::move(b)});
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " iou mismatches");
  o.require(overall_iou(pairs) == static_cast<double>(inter_sum) / static_cast<double>(union_sum),
            "overall_iou mismatch");
  o.require(std::abs(mean_iou(pairs) - iou_sum / 200.0) <= 1e-15, "mean_iou mismatch");

  int dominated = 0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    testing::SyntheticOptions opts;
    opts.seed = rng();
    opts.images = 2 + static_cast<int>(rng() % 3);
    opts.records = 4 + static_cast<int>(rng() % 5);
    const auto ds = testing::make_synthetic(opts);
    const bool vit = rng() % 2;
    const auto enc = mock(vit ? "mock-transformer" : "mock-residual", rng() % 10000);
    BenchmarkSettings s;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    s.weights = {unit(rng), unit(rng)};
    s.visual.masking.k = static_cast<int>(rng() % 5);
    if (rng() % 4 == 0) s.baseline = vit ? BaselineKind::kRegionToken : BaselineKind::kScoreMap;
    BenchmarkRunner runner(ds.data, *enc.visual, *enc.text, s);
    const auto sum = runner.run().summary;
    dominated += sum.upper_bound_oiou && sum.oiou <= *sum.upper_bound_oiou &&
                 sum.miou <= *sum.upper_bound_miou;
  }
  o.require(dominated == 20, std::to_string(20 - dominated) + " of 20 configs beat the upper bound");
  if (o.pass) o.detail = "200 pairs exact; upper bound dominates 20/20 configs";
  return o;
}

Outcome rle_codec() {
  Outcome o;
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> dim(1, 16);
  std::uniform_real_distribution<double> density(0.0, 1.0);
  int failures = 0;
  for (int i = 0; i < 200; ++i) {
    const MaskProposal m = testing::random_mask(rng, dim(rng), dim(rng), density(rng));
    failures += !(rle_decode(rle_encode(m)) == m);
  }
  o.require(failures == 0, std::to_string(failures) + " round-trip failures");
  o.require(rle_encode(MaskProposal(3, 3)).counts == std::vector<std::uint64_t>{9}, "3x3 zeros");
  MaskProposal col(2, 2);
  col.set(0, 0, true);
  col.set(1, 0, true);
  o.require(rle_encode(col).counts == std::vector<std::uint64_t>{0, 2, 2}, "2x2 first column");
  if (o.pass) o.detail = "200 round trips; [9] and [0,2,2] match";
  return o;
}

Outcome np_extraction() {
  Outcome o;
  const auto parses =
      index_parses(load_parse_file(std::string(GK_DATA_DIR) + "/fixtures/np_appendix.json"));
  const std::vector<std::pair<std::string, std::string>> table = {
      {"mom", "mom"},
      {"little girl", "little girl"},
      {"near zebra", "zebra"},
      {"right sandwich", "sandwich"},
      {"girl's umbrella", "girl's umbrella"},
      {"glass of juice in table", "glass"},
      {"yellow baked squash dish", "yellow baked squash dish"},
      {"left person with elbow bent", "person"},
      {"child sitting on womans lap", "child"},
      {"a cow's ear with a circular tag", "a cow's ear"},
      {"flowered quilt on back of couch", "quilt"},
      {"a mother giraffe licking her baby", "a mother giraffe"},
      {"with bruises! okey, closest ugly couch", "closest ugly couch"},
      {"a black and white dog with pointy ears", "a black and white dog"},
      {"that was it ... man in the center up front", "man"},
      {"the baby boy wearing a red shirt and gray bib", "the baby boy"},
      {"a flat box full of plants labeled wegman's nursery", "a flat box"},
      {"a man's black tie under all the other ties he is wearing", "a man's black tie"},
  };
  int matched = 0;
  for (const auto& [text, expected] : table) {
    auto it = parses.find(text);
    if (it == parses.end()) continue;
    matched += extract_target_np(it->second, Expression(text)).text == expected;
  }
  o.require(matched >= 10, std::to_string(matched) + "/18 appendix rows");
  const std::string verb = "a cat is lying on the seat of the scooter";
  const bool verb_ok = parses.count(verb) &&
                       extract_target_np(parses.at(verb), Expression(verb)).text == "a cat";
  o.require(verb_ok, "verb-root fixture");
  if (o.pass) o.detail = std::to_string(matched) + "/18 appendix rows verbatim; verb root -> \"a cat\"";
  return o;
}

Outcome determinism() {
  Outcome o;
  const auto ds = testing::make_synthetic({});
  const auto enc = mock("mock-transformer", 3);
  auto run = [&](int threads) {
    BenchmarkSettings s;
    s.threads = threads;
    BenchmarkRunner runner(ds.data, *enc.visual, *enc.text, s);
    return runner.run().dump();
  };
  const std::string first = run(1);
  o.require(first == run(1), "serial reruns differ");
  o.require(first == run(4), "serial and parallel reports differ");

  // The same through the file-driven path.
  const auto dir = std::filesystem::temp_directory_path() / "gk_acceptance_det";
  std::filesystem::remove_all(dir);
  testing::write_synthetic(ds, dir);
  KeyValueConfig cfg = KeyValueConfig::load(dir / "bench.cfg");
  const std::string file_a = run_benchmark(load_benchmark_job(cfg)).dump();
  cfg.set("threads", "4");
  const std::string file_b = run_benchmark(load_benchmark_job(cfg)).dump();
  o.require(file_a == file_b, "file-driven serial and parallel reports differ");
  if (o.pass) o.detail = "5-example report identical over 2 runs and 1 vs 4 threads";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, "identity reductions", identity_reductions},
      {2, "masking independence", masking_independence},
      {3, "definitional reductions", definitional_reductions},
      {4, "metric oracles and upper-bound dominance", metric_oracles},
      {5, "RLE codec", rle_codec},
      {6, "NP extraction", np_extraction},
      {7, "end-to-end determinism", determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s [%d] %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs,
                o.detail.c_str());
    failed += !o.pass;
  }
  std::printf(
      "SKIP [8] full-scale RefCOCOg check: needs pretrained dual-encoder weights, RefCOCOg "
      "val(U) records and FreeSOLO proposals (run via the Python adapter bridge; not a CI gate)\n");
  return failed == 0 ? 0 : 1;
}
