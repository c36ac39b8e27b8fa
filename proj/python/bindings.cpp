#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <mutex>

#include "grounding_kit/baselines.hpp"
#include "grounding_kit/benchmark.hpp"
#include "grounding_kit/image_ops.hpp"
#include "grounding_kit/mask_io.hpp"
#include "grounding_kit/metrics.hpp"
#include "grounding_kit/mock_encoder.hpp"
#include "grounding_kit/scoring.hpp"
#include "grounding_kit/text_context.hpp"
#include "grounding_kit/visual_context.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using nlohmann::json;

namespace gk {
namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// ---------------------------------------------------------------------------
// numpy / json conversion

Image image_from(const U8Array& a, std::string id = {}) {
  if (a.ndim() != 3 || a.shape(2) != 3) {
    fail(ErrorCode::kShapeMismatch, "image must be an HxWx3 uint8 array");
  }
  const auto* p = a.data();
  std::vector<std::uint8_t> rgb(p, p + a.size());
  return Image(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), std::move(rgb),
               std::move(id));
}

py::array image_to(const Image& img) {
  U8Array out({img.height(), img.width(), 3});
  std::copy(img.data().begin(), img.data().end(), out.mutable_data());
  return out;
}

MaskProposal mask_from(const U8Array& a) {
  if (a.ndim() != 2) fail(ErrorCode::kShapeMismatch, "mask must be a 2-D array");
  const auto* p = a.data();
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(a.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = p[i] != 0 ? 1 : 0;
  return MaskProposal(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), std::move(bits));
}

py::array mask_to(const MaskProposal& m) {
  py::array_t<bool> out({m.height(), m.width()});
  auto* p = out.mutable_data();
  for (std::size_t i = 0; i < m.bits().size(); ++i) p[i] = m.bits()[i] != 0;
  return out;
}

ProposalSet proposals_from(const std::vector<U8Array>& masks) {
  ProposalSet set;
  for (const auto& m : masks) set.proposals.push_back(mask_from(m));
  return set;
}

EmbeddingVector vec_from(const F64Array& a) {
  if (a.ndim() != 1) fail(ErrorCode::kShapeMismatch, "embedding must be a 1-D array");
  return EmbeddingVector(std::vector<double>(a.data(), a.data() + a.size()));
}

py::array vec_to(std::span<const double> v) {
  F64Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array vec_to(const EmbeddingVector& v) { return vec_to(v.values()); }

// Feature grids cross the boundary as (channels, rows, cols) arrays.
FeatureGrid grid_from(const F64Array& a, GridProvenance provenance = GridProvenance::kBackbone) {
  if (a.ndim() != 3) fail(ErrorCode::kShapeMismatch, "feature grid must be a (C, rows, cols) array");
  std::vector<double> values(a.data(), a.data() + a.size());
  return FeatureGrid(static_cast<int>(a.shape(0)),
                     GridShape{static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))},
                     std::move(values), provenance);
}

py::array grid_to(const FeatureGrid& g) {
  F64Array out({g.channels(), g.shape().rows, g.shape().cols});
  std::copy(g.values().begin(), g.values().end(), out.mutable_data());
  return out;
}

json json_from(const py::handle& obj) {
  const auto text = py::module_::import("json").attr("dumps")(obj).cast<std::string>();
  return json::parse(text);
}

py::object json_to(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

ParseTree parse_from(const py::handle& obj) {
  ParseTree parse = parse_tree_from_json(json_from(obj));
  parse.validate();
  return parse;
}

py::dict np_to(const NounPhrase& np) {
  return py::dict("text"_a = np.text, "span"_a = py::make_tuple(np.span.begin, np.span.end),
                  "is_whole_sentence"_a = np.is_whole_sentence);
}

py::list scored_to(const std::vector<ScoredMask>& scored) {
  py::list out;
  for (const ScoredMask& s : scored) {
    py::dict d("index"_a = s.proposal_index, "score"_a = s.score, "empty"_a = s.empty_proposal);
    if (s.breakdown) {
      d["global"] = s.breakdown->global;
      d["local"] = s.breakdown->local;
    }
    out.append(d);
  }
  return out;
}

KeyValueConfig config_from(const py::dict& values) {
  std::string text;
  for (auto [k, v] : values) {
    text += py::str(k).cast<std::string>() + " = " + py::str(v).cast<std::string>() + "\n";
  }
  return KeyValueConfig::parse(text);
}

// ---------------------------------------------------------------------------
// Python-implemented encoders. None of these are concurrent-safe, so the
// library always calls them on the calling thread, which holds the GIL.

template <typename Self>
py::function override_of(const Self* self, const char* name, bool required = true) {
  py::gil_scoped_acquire gil;
  py::function f = py::get_override(self, name);
  if (!f && required) {
    fail(ErrorCode::kEncoderFailure, std::string("Python encoder does not define ") + name + "()");
  }
  return f;
}

class PyResidualEncoder : public ResidualEncoder {
 public:
  explicit PyResidualEncoder(VisualEncoderInfo info) : info_(std::move(info)) {
    info_.kind = EncoderKind::kResidualBackbone;
    info_.validate();
  }
  const VisualEncoderInfo& info() const override { return info_; }
  std::string fingerprint() const override {
    return override_of(this, "fingerprint")().cast<std::string>();
  }
  FeatureGrid backbone_features(const Image& img) const override {
    return grid_from(override_of(this, "backbone_features")(image_to(img)).cast<F64Array>());
  }
  EmbeddingVector attention_pool(const FeatureGrid& grid) const override {
    return vec_from(override_of(this, "attention_pool")(grid_to(grid)).cast<F64Array>());
  }
  // Optional override returning a dict with heads, positional, q_proj, k_proj,
  // v_proj, q_bias, k_bias, v_bias, c_proj, c_bias. Read once.
  const AttentionPoolWeights* pooling_weights() const override {
    std::call_once(pool_once_, [this] {
      py::function f = override_of(this, "pooling_weights", false);
      if (!f) return;
      py::object obj = f();
      if (obj.is_none()) return;
      py::dict d = obj.cast<py::dict>();
      AttentionPoolWeights w;
      w.heads = d["heads"].cast<int>();
      w.positional = d["positional"].cast<Eigen::MatrixXd>();
      w.q_proj = d["q_proj"].cast<Eigen::MatrixXd>();
      w.k_proj = d["k_proj"].cast<Eigen::MatrixXd>();
      w.v_proj = d["v_proj"].cast<Eigen::MatrixXd>();
      w.q_bias = d["q_bias"].cast<Eigen::VectorXd>();
      w.k_bias = d["k_bias"].cast<Eigen::VectorXd>();
      w.v_bias = d["v_bias"].cast<Eigen::VectorXd>();
      w.c_proj = d["c_proj"].cast<Eigen::MatrixXd>();
      w.c_bias = d["c_bias"].cast<Eigen::VectorXd>();
      const auto c = static_cast<Eigen::Index>(info_.channels);
      const auto cells = static_cast<Eigen::Index>(info_.grid.cells());
      if (w.q_proj.rows() != c || w.q_proj.cols() != c || w.k_proj.rows() != c ||
          w.k_proj.cols() != c || w.v_proj.rows() != c || w.v_proj.cols() != c ||
          w.positional.rows() != cells + 1 || w.positional.cols() != c || w.q_bias.size() != c ||
          w.k_bias.size() != c || w.v_bias.size() != c || w.c_proj.cols() != c ||
          w.c_proj.rows() != info_.embed_dim || w.c_bias.size() != info_.embed_dim ||
          w.heads <= 0 || c % w.heads != 0) {
        fail(ErrorCode::kDimensionMismatch, "pooling_weights() shapes do not match the encoder info");
      }
      pool_ = std::move(w);
    });
    return pool_ ? &*pool_ : nullptr;
  }
  FeatureGrid similarity_gradient(const Image& img, const EmbeddingVector& t) const override {
    py::function f = override_of(this, "similarity_gradient", false);
    if (!f) return ResidualEncoder::similarity_gradient(img, t);
    return grid_from(f(image_to(img), vec_to(t)).cast<F64Array>());
  }

 private:
  VisualEncoderInfo info_;
  mutable std::once_flag pool_once_;
  mutable std::optional<AttentionPoolWeights> pool_;
};

class PyTransformerEncoder : public TransformerEncoder {
 public:
  explicit PyTransformerEncoder(VisualEncoderInfo info) : info_(std::move(info)) {
    info_.kind = EncoderKind::kPatchTransformer;
    info_.validate();
  }
  const VisualEncoderInfo& info() const override { return info_; }
  std::string fingerprint() const override {
    return override_of(this, "fingerprint")().cast<std::string>();
  }
  TokenState embed(const Image& img) const override {
    return state_from(override_of(this, "embed")(image_to(img)));
  }
  void run_layer(int layer, TokenState& state) const override {
    state = state_from(override_of(this, "run_layer")(layer, vec_to(state.cls), grid_to(state.grid)));
  }
  EmbeddingVector head(const TokenState& state) const override {
    return vec_from(override_of(this, "head")(vec_to(state.cls), grid_to(state.grid)).cast<F64Array>());
  }

 private:
  // Python returns (cls, grid) with grid shaped (width, rows, cols).
  static TokenState state_from(const py::object& result) {
    auto pair = result.cast<std::pair<F64Array, F64Array>>();
    const EmbeddingVector cls = vec_from(pair.first);
    return TokenState{std::vector<double>(cls.values().begin(), cls.values().end()),
                      grid_from(pair.second, GridProvenance::kTokenState)};
  }

  VisualEncoderInfo info_;
};

class PyTextEncoder : public TextEncoder {
 public:
  explicit PyTextEncoder(TextEncoderInfo info) : info_(info) {
    if (info_.embed_dim <= 0) fail(ErrorCode::kInvalidArgument, "embed_dim must be positive");
  }
  const TextEncoderInfo& info() const override { return info_; }
  std::string fingerprint() const override {
    return override_of(this, "fingerprint")().cast<std::string>();
  }
  EmbeddingVector encode_text(const std::string& text) const override {
    return vec_from(override_of(this, "encode_text")(text).cast<F64Array>());
  }

 private:
  TextEncoderInfo info_;
};

VisualContextConfig visual_config(int mask_layers, bool reapply_per_layer, const std::string& query) {
  VisualContextConfig cfg;
  cfg.masking.k = mask_layers;
  cfg.masking.reapply_per_layer = reapply_per_layer;
  if (query == "in-mask") {
    cfg.query_mode = QueryMode::kInMaskMean;
  } else if (query == "full-grid") {
    cfg.query_mode = QueryMode::kFullGridMean;
  } else {
    fail(ErrorCode::kInvalidArgument, "query_mode must be in-mask or full-grid, got '" + query + "'");
  }
  return cfg;
}

py::object benchmark(const std::filesystem::path& config_path, const py::dict& overrides,
                     std::shared_ptr<VisualEncoder> visual, std::shared_ptr<TextEncoder> text) {
  KeyValueConfig cfg = KeyValueConfig::load(config_path);
  for (auto [k, v] : overrides) {
    cfg.set(py::str(k).cast<std::string>(), py::str(v).cast<std::string>());
  }
  if (!visual && !text) {
    BenchmarkJob job = load_benchmark_job(cfg);
    BenchmarkReport report = run_benchmark(job);
    if (job.out) write_report(*job.out, report);
    return json_to(report.to_json());
  }
  if (!visual || !text) {
    fail(ErrorCode::kInvalidArgument, "pass both visual and text encoders, or neither");
  }
  BenchmarkData data = load_benchmark_data(cfg);
  BenchmarkSettings settings = settings_from(cfg);
  json encoder_config = {{"kind", "python"},
                         {"visual", visual->fingerprint()},
                         {"text", text->fingerprint()}};
  BenchmarkRunner runner(data, *visual, *text, settings, FeatureCache::from_env(), encoder_config);
  BenchmarkReport report = runner.run();
  if (auto out = cfg.get_path("out")) write_report(*out, report);
  return json_to(report.to_json());
}

}  // namespace
}  // namespace gk

PYBIND11_MODULE(_core, m) {
  using namespace gk;
  m.doc() = "Zero-shot referring image segmentation with global-local context features";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<Error>(m, "GroundingKitError", PyExc_RuntimeError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = error_type.get_stored();
      py::object inst = type(e.what());
      inst.attr("code") = std::string(error_code_name(e.code()));
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  // Encoder descriptions --------------------------------------------------
  py::enum_<EncoderKind>(m, "EncoderKind")
      .value("RESIDUAL_BACKBONE", EncoderKind::kResidualBackbone)
      .value("PATCH_TRANSFORMER", EncoderKind::kPatchTransformer);

  py::class_<VisualEncoderInfo>(m, "VisualEncoderInfo")
      .def(py::init([](int input_resolution, std::pair<int, int> grid, int channels, int embed_dim,
                       int layer_count, const std::string& interpolation) {
             VisualEncoderInfo info;
             info.input_resolution = input_resolution;
             info.grid = {grid.first, grid.second};
             info.channels = channels;
             info.embed_dim = embed_dim;
             info.layer_count = layer_count;
             info.interpolation = parse_interpolation(interpolation);
             return info;
           }),
           "input_resolution"_a = 224, "grid"_a = std::pair<int, int>{7, 7}, "channels"_a,
           "embed_dim"_a, "layer_count"_a = 0, "interpolation"_a = "bilinear")
      .def_readonly("kind", &VisualEncoderInfo::kind)
      .def_readonly("input_resolution", &VisualEncoderInfo::input_resolution)
      .def_property_readonly("grid",
                             [](const VisualEncoderInfo& i) {
                               return py::make_tuple(i.grid.rows, i.grid.cols);
                             })
      .def_readonly("channels", &VisualEncoderInfo::channels)
      .def_readonly("embed_dim", &VisualEncoderInfo::embed_dim)
      .def_readonly("layer_count", &VisualEncoderInfo::layer_count)
      .def_property_readonly("interpolation", [](const VisualEncoderInfo& i) {
        return interpolation_name(i.interpolation);
      });

  py::class_<TextEncoderInfo>(m, "TextEncoderInfo")
      .def(py::init([](int embed_dim, int max_token_length) {
             return TextEncoderInfo{embed_dim, max_token_length};
           }),
           "embed_dim"_a, "max_token_length"_a = 77)
      .def_readonly("embed_dim", &TextEncoderInfo::embed_dim)
      .def_readonly("max_token_length", &TextEncoderInfo::max_token_length);

  // Encoders ----------------------------------------------------------------
  py::class_<VisualEncoder, std::shared_ptr<VisualEncoder>>(m, "VisualEncoder")
      .def_property_readonly("info", &VisualEncoder::info, py::return_value_policy::reference_internal)
      .def_property_readonly("concurrent_safe", &VisualEncoder::concurrent_safe)
      .def("fingerprint", &VisualEncoder::fingerprint)
      .def("encode_image",
           [](const VisualEncoder& e, const U8Array& img) { return vec_to(e.encode_image(image_from(img))); },
           "image"_a);

  py::class_<ResidualEncoder, VisualEncoder, std::shared_ptr<ResidualEncoder>>(m, "ResidualEncoder")
      .def("backbone_features",
           [](const ResidualEncoder& e, const U8Array& img) {
             return grid_to(e.backbone_features(image_from(img)));
           },
           "image"_a)
      .def("attention_pool",
           [](const ResidualEncoder& e, const F64Array& grid) {
             return vec_to(e.attention_pool(grid_from(grid)));
           },
           "grid"_a)
      .def("similarity_gradient",
           [](const ResidualEncoder& e, const U8Array& img, const F64Array& t) {
             return grid_to(e.similarity_gradient(image_from(img), vec_from(t)));
           },
           "image"_a, "text_feature"_a);

  py::class_<TransformerEncoder, VisualEncoder, std::shared_ptr<TransformerEncoder>>(
      m, "TransformerEncoder")
      .def_property_readonly("layer_count", &TransformerEncoder::layer_count)
      .def("embed",
           [](const TransformerEncoder& e, const U8Array& img) {
             TokenState s = e.embed(image_from(img));
             return py::make_tuple(vec_to(s.cls), grid_to(s.grid));
           },
           "image"_a)
      .def("run_layer",
           [](const TransformerEncoder& e, int layer, const F64Array& cls, const F64Array& grid) {
             const EmbeddingVector c = vec_from(cls);
             TokenState s{std::vector<double>(c.values().begin(), c.values().end()),
                          grid_from(grid, GridProvenance::kTokenState)};
             e.run_layer(layer, s);
             return py::make_tuple(vec_to(s.cls), grid_to(s.grid));
           },
           "layer"_a, "cls"_a, "grid"_a)
      .def("head",
           [](const TransformerEncoder& e, const F64Array& cls, const F64Array& grid) {
             const EmbeddingVector c = vec_from(cls);
             TokenState s{std::vector<double>(c.values().begin(), c.values().end()),
                          grid_from(grid, GridProvenance::kTokenState)};
             return vec_to(e.head(s));
           },
           "cls"_a, "grid"_a);

  py::class_<TextEncoder, std::shared_ptr<TextEncoder>>(m, "TextEncoder")
      .def_property_readonly("info", &TextEncoder::info, py::return_value_policy::reference_internal)
      .def_property_readonly("concurrent_safe", &TextEncoder::concurrent_safe)
      .def("fingerprint", &TextEncoder::fingerprint)
      .def("encode_text", [](const TextEncoder& e, const std::string& s) { return vec_to(e.encode_text(s)); },
           "text"_a);

  py::class_<PyResidualEncoder, ResidualEncoder, std::shared_ptr<PyResidualEncoder>>(
      m, "PyResidualEncoder",
      "Subclass and define fingerprint(), backbone_features(image) -> (C, rows, cols),\n"
      "where image is the raw HxWx3 array (resize it to info.input_resolution yourself),\n"
      "attention_pool(grid) -> (D,). Masked pooling needs pooling_weights() -> dict;\n"
      "similarity_gradient(image, t) is optional.")
      .def(py::init<VisualEncoderInfo>(), "info"_a);

  py::class_<PyTransformerEncoder, TransformerEncoder, std::shared_ptr<PyTransformerEncoder>>(
      m, "PyTransformerEncoder",
      "Subclass and define fingerprint(), embed(image) -> (cls, grid),\n"
      "run_layer(layer, cls, grid) -> (cls, grid) and head(cls, grid) -> (D,).")
      .def(py::init<VisualEncoderInfo>(), "info"_a);

  py::class_<PyTextEncoder, TextEncoder, std::shared_ptr<PyTextEncoder>>(
      m, "PyTextEncoder", "Subclass and define fingerprint() and encode_text(text) -> (D,).")
      .def(py::init<TextEncoderInfo>(), "info"_a);

  m.def("make_encoders",
        [](const py::dict& settings) {
          EncoderPair pair = make_encoders(config_from(settings));
          return py::make_tuple(std::const_pointer_cast<VisualEncoder>(pair.visual),
                                std::const_pointer_cast<TextEncoder>(pair.text));
        },
        "settings"_a, "Builds (visual, text) encoders from adapter settings, e.g. {'kind': 'mock-residual'}.");
  m.def("load_encoders",
        [](const std::filesystem::path& path) {
          EncoderPair pair = load_encoders(path);
          return py::make_tuple(std::const_pointer_cast<VisualEncoder>(pair.visual),
                                std::const_pointer_cast<TextEncoder>(pair.text));
        },
        "path"_a);

  // Vectors and masks -----------------------------------------------------
  m.def("cosine", [](const F64Array& a, const F64Array& b) { return cosine(vec_from(a), vec_from(b)); },
        "a"_a, "b"_a);
  m.def("fuse",
        [](const F64Array& a, const F64Array& b, double w) {
          return vec_to(fuse(vec_from(a), vec_from(b), w));
        },
        "first"_a, "second"_a, "weight"_a);
  m.def("resize_mask_to_grid",
        [](const U8Array& mask, std::pair<int, int> grid) {
          GridMask g = resize_mask_to_grid(mask_from(mask), {grid.first, grid.second});
          py::array_t<bool> out({grid.first, grid.second});
          for (int i = 0; i < g.shape().cells(); ++i) out.mutable_data()[i] = g.at(i);
          return out;
        },
        "mask"_a, "grid"_a);
  m.def("crop_to_mask",
        [](const U8Array& img, const U8Array& mask) {
          return image_to(crop_to_mask(image_from(img), mask_from(mask)));
        },
        "image"_a, "mask"_a);

  // Visual and text context -------------------------------------------------
  m.def("global_visual_feature",
        [](const VisualEncoder& e, const U8Array& img, const U8Array& mask, int mask_layers,
           bool reapply_per_layer, const std::string& query_mode) {
          return vec_to(global_visual_feature(e, image_from(img), mask_from(mask),
                                              visual_config(mask_layers, reapply_per_layer, query_mode)));
        },
        "encoder"_a, "image"_a, "mask"_a, "mask_layers"_a = 3, "reapply_per_layer"_a = true,
        "query_mode"_a = "in-mask");
  m.def("local_visual_feature",
        [](const VisualEncoder& e, const U8Array& img, const U8Array& mask) {
          return vec_to(local_visual_feature(e, image_from(img), mask_from(mask)));
        },
        "encoder"_a, "image"_a, "mask"_a);
  m.def("global_local_visual_feature",
        [](const VisualEncoder& e, const U8Array& img, const U8Array& mask, double alpha,
           int mask_layers, bool reapply_per_layer, const std::string& query_mode) {
          VisualFeatures f = global_local_visual_feature(
              e, image_from(img), mask_from(mask), alpha,
              visual_config(mask_layers, reapply_per_layer, query_mode));
          return py::dict("fused"_a = vec_to(f.fused), "global"_a = vec_to(f.global),
                          "local"_a = vec_to(f.local));
        },
        "encoder"_a, "image"_a, "mask"_a, "alpha"_a = 0.95, "mask_layers"_a = 3,
        "reapply_per_layer"_a = true, "query_mode"_a = "in-mask");

  m.def("extract_target_np",
        [](const py::object& parse, const std::string& expression) {
          return np_to(extract_target_np(parse_from(parse), Expression(expression)));
        },
        "parse"_a, "expression"_a,
        "parse: {'tokens': [{'i', 'text', 'pos', 'head', 'dep'}, ...], 'chunks': [[begin, end], ...]}");
  m.def("global_local_text_feature",
        [](const TextEncoder& e, const std::string& expression, const py::object& parse, double beta) {
          TextFeatures f = global_local_text_feature(e, Expression(expression), parse_from(parse), beta);
          return py::dict("fused"_a = vec_to(f.fused), "global"_a = vec_to(f.global),
                          "local"_a = vec_to(f.local), "np"_a = np_to(f.np));
        },
        "encoder"_a, "expression"_a, "parse"_a, "beta"_a = 0.5);

  // Scoring and baselines -------------------------------------------------
  m.def("score_proposals",
        [](const VisualEncoder& visual, const TextEncoder& text, const U8Array& img,
           const std::vector<U8Array>& proposals, const std::string& expression,
           const py::object& parse, double alpha, double beta, int mask_layers,
           bool reapply_per_layer, const std::string& query_mode, int threads) {
          ScoringConfig cfg{visual_config(mask_layers, reapply_per_layer, query_mode), threads};
          return scored_to(score_proposals(visual, text, image_from(img), proposals_from(proposals),
                                           Expression(expression), parse_from(parse),
                                           FusionWeights{alpha, beta}, cfg));
        },
        "visual"_a, "text"_a, "image"_a, "proposals"_a, "expression"_a, "parse"_a,
        "alpha"_a = 0.95, "beta"_a = 0.5, "mask_layers"_a = 3, "reapply_per_layer"_a = true,
        "query_mode"_a = "in-mask", "threads"_a = 1);
  m.def("select_mask",
        [](const std::vector<double>& scores) {
          ScoredMask best = select_mask(to_scored(scores));
          return py::make_tuple(best.proposal_index, best.score);
        },
        "scores"_a, "Returns (index, score) of the best proposal; ties go to the lowest index.");
  m.def("baseline_scores",
        [](const std::string& kind, const VisualEncoder& e, const U8Array& img,
           const F64Array& text_feature, const std::vector<U8Array>& proposals, int threads) {
          return baseline_scores(parse_baseline(kind), e, image_from(img), vec_from(text_feature),
                                 proposals_from(proposals), threads);
        },
        "kind"_a, "encoder"_a, "image"_a, "text_feature"_a, "proposals"_a, "threads"_a = 1);

  // Masks on disk and metrics -----------------------------------------------
  m.def("rle_encode", [](const U8Array& mask) { return json_to(rle_to_json(rle_encode(mask_from(mask)))); },
        "mask"_a);
  m.def("rle_decode",
        [](const py::object& rle) { return mask_to(rle_decode(rle_from_json(json_from(rle), "rle"))); },
        "rle"_a);
  m.def("iou", [](const U8Array& a, const U8Array& b) { return iou(mask_from(a), mask_from(b)); },
        "prediction"_a, "ground_truth"_a);
  m.def("overall_iou",
        [](const std::vector<std::pair<U8Array, U8Array>>& pairs) {
          std::vector<MaskPair> p;
          for (const auto& [a, b] : pairs) p.emplace_back(mask_from(a), mask_from(b));
          return overall_iou(p);
        },
        "pairs"_a);
  m.def("mean_iou",
        [](const std::vector<std::pair<U8Array, U8Array>>& pairs) {
          std::vector<MaskPair> p;
          for (const auto& [a, b] : pairs) p.emplace_back(mask_from(a), mask_from(b));
          return mean_iou(p);
        },
        "pairs"_a);
  m.def("resize_image",
        [](const U8Array& img, int height, int width, const std::string& interpolation) {
          return image_to(resize_image(image_from(img), height, width, parse_interpolation(interpolation)));
        },
        "image"_a, "height"_a, "width"_a, "interpolation"_a = "bilinear");
  m.def("load_image", [](const std::filesystem::path& p) { return image_to(load_image(p)); }, "path"_a);
  m.def("save_image",
        [](const U8Array& img, const std::filesystem::path& p) { save_image(image_from(img), p); },
        "image"_a, "path"_a);

  // Benchmark ---------------------------------------------------------------
  m.def("run_benchmark", &benchmark, "config"_a, "overrides"_a = py::dict(),
        "visual"_a = nullptr, "text"_a = nullptr,
        "Runs a benchmark config (same keys as the CLI) and returns the report as a dict.\n"
        "Passing visual and text replaces the config's encoder.");
}
