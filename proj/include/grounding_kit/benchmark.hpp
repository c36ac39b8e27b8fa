#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "grounding_kit/baselines.hpp"
#include "grounding_kit/feature_cache.hpp"
#include "grounding_kit/kv_config.hpp"
#include "grounding_kit/mask_io.hpp"
#include "grounding_kit/metrics.hpp"
#include "grounding_kit/mock_encoder.hpp"
#include "grounding_kit/text_context.hpp"

namespace gk {

struct BenchmarkSettings {
  FusionWeights weights;
  VisualContextConfig visual;
  std::optional<BaselineKind> baseline;  // nullopt: global-local pipeline
  int threads = 1;                       // execution only; never affects results
  bool upper_bound = true;
  bool class_metrics = true;  // reported when the records carry classes

  nlohmann::json to_json() const;
};

struct BenchmarkData {
  std::vector<EvalRecord> records;
  std::vector<ProposalImage> proposals;
  std::map<std::string, ParseTree> parses;  // keyed by expression text
  std::optional<GtInventory> inventory;     // default: derived from classed records
  std::function<Image(const EvalRecord&)> image_source;
  nlohmann::json provenance = nlohmann::json::object();  // input locations, echoed in reports
};

struct ExampleRow {
  std::string id;
  std::string image_id;
  int chosen = -1;
  std::optional<double> score;
  Overlap overlap;  // prediction vs ground truth; a failure counts (0, |gt|)
  std::optional<bool> class_match;
  std::optional<Overlap> upper_bound;
  std::optional<std::string> error;

  bool failed() const { return error.has_value(); }
  nlohmann::json to_json() const;
  static ExampleRow from_json(const nlohmann::json& j);
};

struct BenchmarkSummary {
  double oiou = 0.0;
  double miou = 0.0;
  std::optional<double> mc_acc;
  std::optional<double> cc_oiou;
  std::optional<double> upper_bound_oiou;
  std::optional<double> upper_bound_miou;
  int examples = 0;
  int failures = 0;

  nlohmann::json to_json() const;
};

/// Aggregates rows in index order. Failed rows count toward oIoU with zero
/// intersection and are left out of mIoU.
BenchmarkSummary summarize(const std::vector<ExampleRow>& rows);

struct BenchmarkReport {
  nlohmann::json config;
  std::vector<ExampleRow> rows;
  BenchmarkSummary summary;

  nlohmann::json to_json() const;
  std::string dump() const;
};

// Runs the whole evaluation in two phases: prepare() computes every feature
// that does not depend on the fusion weights (once per image for the
// backbone), evaluate() fuses, scores, selects and aggregates. Ablation over
// alpha/beta re-runs only evaluate().
class BenchmarkRunner {
 public:
  BenchmarkRunner(const BenchmarkData& data, const VisualEncoder& visual, const TextEncoder& text,
                  BenchmarkSettings settings, std::optional<FeatureCache> cache = std::nullopt,
                  nlohmann::json encoder_config = nlohmann::json::object());
  ~BenchmarkRunner();
  BenchmarkRunner(const BenchmarkRunner&) = delete;
  BenchmarkRunner& operator=(const BenchmarkRunner&) = delete;

  void prepare();
  BenchmarkReport evaluate(const FusionWeights& weights) const;
  BenchmarkReport run();

  const BenchmarkSettings& settings() const { return settings_; }

 private:
  struct Prepared;
  const BenchmarkData& data_;
  const VisualEncoder& visual_;
  const TextEncoder& text_;
  BenchmarkSettings settings_;
  std::optional<FeatureCache> cache_;
  nlohmann::json encoder_config_;
  std::unique_ptr<Prepared> prepared_;
};

/// Everything needed for a file-driven run.
struct BenchmarkJob {
  BenchmarkData data;
  EncoderPair encoders;
  BenchmarkSettings settings;
  std::optional<std::filesystem::path> out;
};

// Config keys (flat key-value, mirroring CLI flags): records, proposals,
// parses, instances, encoder, alpha, beta, mask-layers, reapply-per-layer,
// query-mode (in-mask|full-grid), baseline (none|grad-cam|score-map|
// region-token|cropping), threads, seed, upper-bound, class-metrics, out.
BenchmarkJob load_benchmark_job(const KeyValueConfig& cfg);
/// Records, proposals, parses and instances only; `encoder` is not required.
BenchmarkData load_benchmark_data(const KeyValueConfig& cfg);
BenchmarkSettings settings_from(const KeyValueConfig& cfg);

BenchmarkReport run_benchmark(const BenchmarkJob& job);
void write_report(const std::filesystem::path& path, const BenchmarkReport& report);

struct SweepSpec {
  enum class Axis { kAlpha, kBeta, kMaskLayers };
  Axis axis = Axis::kAlpha;
  std::vector<double> values;

  std::string axis_name() const;
};

/// "alpha", "beta" or "k", optionally followed by ":v1,v2,..". Without
/// explicit values alpha/beta sweep 0, 0.05, .., 1 and k sweeps 0..L.
SweepSpec parse_sweep(const std::string& spec, int layer_count);

struct AblationRow {
  double value = 0.0;
  BenchmarkSummary summary;
};

std::vector<AblationRow> run_ablation(const BenchmarkJob& job, const SweepSpec& sweep);
std::string ablation_csv(const SweepSpec& sweep, const std::vector<AblationRow>& rows);
std::string ablation_svg(const SweepSpec& sweep, const std::vector<AblationRow>& rows);

}  // namespace gk
