#include "grounding_kit/mock_encoder.hpp"

#include <cmath>
#include <sstream>

#include "grounding_kit/atomic_file.hpp"
#include "grounding_kit/log.hpp"
#include "rng.hpp"

namespace gk {

namespace {

Eigen::MatrixXd random_matrix(detail::StableRng& rng, int rows, int cols, double scale) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.normal() * scale;
  }
  return m;
}

Eigen::VectorXd random_vector(detail::StableRng& rng, int size, double scale) {
  Eigen::VectorXd v(size);
  for (int i = 0; i < size; ++i) v(i) = rng.normal() * scale;
  return v;
}

// Derives independent streams per parameter group from one seed.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view tag) {
  return fnv1a64(tag, seed ^ 0x9e3779b97f4a7c15ULL);
}

AttentionPoolWeights make_pool(detail::StableRng& rng, int cells, int channels, int embed_dim,
                               int heads) {
  const double s = 1.0 / std::sqrt(static_cast<double>(channels));
  AttentionPoolWeights w;
  w.heads = heads;
  w.positional = random_matrix(rng, cells + 1, channels, s);
  w.q_proj = random_matrix(rng, channels, channels, s);
  w.k_proj = random_matrix(rng, channels, channels, s);
  w.v_proj = random_matrix(rng, channels, channels, s);
  w.q_bias = random_vector(rng, channels, 0.02);
  w.k_bias = random_vector(rng, channels, 0.02);
  w.v_bias = random_vector(rng, channels, 0.02);
  w.c_proj = random_matrix(rng, embed_dim, channels, s);
  w.c_bias = random_vector(rng, embed_dim, 0.02);
  return w;
}

Eigen::MatrixXd layer_norm(const Eigen::MatrixXd& x, const Eigen::VectorXd& gamma,
                           const Eigen::VectorXd& beta) {
  constexpr double kEps = 1e-5;
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    const double inv = 1.0 / std::sqrt(var + kEps);
    out.row(r) = ((x.row(r).array() - mean) * inv * gamma.transpose().array() +
                  beta.transpose().array())
                     .matrix();
  }
  return out;
}

double gelu(double v) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * v * (1.0 + std::tanh(kC * (v + 0.044715 * v * v * v)));
}

Eigen::MatrixXd state_to_matrix(const TokenState& state) {
  const int cells = state.grid.shape().cells();
  const int channels = state.grid.channels();
  Eigen::MatrixXd x(cells + 1, channels);
  for (int c = 0; c < channels; ++c) {
    x(0, c) = state.cls[c];
    for (int i = 0; i < cells; ++i) x(i + 1, c) = state.grid.at(c, i);
  }
  return x;
}

void matrix_to_state(const Eigen::MatrixXd& x, TokenState& state) {
  const int cells = state.grid.shape().cells();
  for (int c = 0; c < state.grid.channels(); ++c) {
    state.cls[c] = x(0, c);
    for (int i = 0; i < cells; ++i) state.grid.at(c, i) = x(i + 1, c);
  }
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace

void MockEncoderConfig::validate() const {
  VisualEncoderInfo info{kind, input_resolution, grid, channels, embed_dim,
                         kind == EncoderKind::kPatchTransformer ? layers : 0, interpolation};
  info.validate();
  if (heads < 1 || channels % heads != 0) {
    fail(ErrorCode::kSchemaError, "width must be divisible by the head count");
  }
  if (mlp_ratio < 1) fail(ErrorCode::kSchemaError, "mlp ratio must be positive");
  if (max_token_length < 3) fail(ErrorCode::kSchemaError, "max-tokens must be at least 3");
}

std::string MockEncoderConfig::fingerprint() const {
  std::ostringstream out;
  out << "mock/" << encoder_kind_name(kind) << "/r" << input_resolution << "/g" << grid.rows << "x"
      << grid.cols << "/c" << channels << "/d" << embed_dim << "/l" << layers << "/h" << heads
      << "/m" << mlp_ratio << "/s" << seed << "/" << interpolation_name(interpolation);
  return out.str();
}

Eigen::MatrixXd patch_mean_colors(const Image& resized, GridShape grid) {
  const int ph = resized.height() / grid.rows;
  const int pw = resized.width() / grid.cols;
  Eigen::MatrixXd colors(grid.cells(), 3);
  for (int gr = 0; gr < grid.rows; ++gr) {
    for (int gc = 0; gc < grid.cols; ++gc) {
      double sum[3] = {0, 0, 0};
      for (int y = gr * ph; y < (gr + 1) * ph; ++y) {
        for (int x = gc * pw; x < (gc + 1) * pw; ++x) {
          for (int ch = 0; ch < 3; ++ch) sum[ch] += resized.at(y, x, ch);
        }
      }
      for (int ch = 0; ch < 3; ++ch) {
        const double mean = sum[ch] / (static_cast<double>(ph) * pw);
        colors(gr * grid.cols + gc, ch) = (mean / 255.0 - 0.5) / 0.25;
      }
    }
  }
  return colors;
}

// ---------------------------------------------------------------------------
// Residual backbone

MockResidualEncoder::MockResidualEncoder(MockEncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = EncoderKind::kResidualBackbone;
  cfg_.validate();
  info_ = {cfg_.kind, cfg_.input_resolution, cfg_.grid, cfg_.channels, cfg_.embed_dim, 0,
           cfg_.interpolation};

  detail::StableRng backbone_rng(stream_seed(cfg_.seed, "residual/backbone"));
  color_map_ = random_matrix(backbone_rng, cfg_.channels, 3, 1.0 / std::sqrt(3.0));
  color_bias_ = random_vector(backbone_rng, cfg_.channels, 0.1);

  detail::StableRng pool_rng(stream_seed(cfg_.seed, "residual/attnpool"));
  pool_ = make_pool(pool_rng, cfg_.grid.cells(), cfg_.channels, cfg_.embed_dim, cfg_.heads);
}

FeatureGrid MockResidualEncoder::backbone_features(const Image& img) const {
  const Image resized =
      resize_image(img, cfg_.input_resolution, cfg_.input_resolution, cfg_.interpolation);
  const Eigen::MatrixXd colors = patch_mean_colors(resized, cfg_.grid);
  const Eigen::MatrixXd feats =
      (colors * color_map_.transpose()).rowwise() + color_bias_.transpose();
  FeatureGrid grid(cfg_.channels, cfg_.grid, GridProvenance::kBackbone);
  for (int c = 0; c < cfg_.channels; ++c) {
    for (int i = 0; i < cfg_.grid.cells(); ++i) grid.at(c, i) = feats(i, c);
  }
  return grid;
}

EmbeddingVector MockResidualEncoder::attention_pool(const FeatureGrid& grid) const {
  if (grid.channels() != cfg_.channels || grid.shape() != cfg_.grid) {
    fail(ErrorCode::kEncoderFailure, "feature grid shape does not match the encoder");
  }
  const Eigen::MatrixXd tokens = grid_to_tokens(grid);
  const Eigen::VectorXd query = tokens.colwise().mean().transpose();
  return EmbeddingVector(to_std(attention_pool_forward(pool_, tokens, query)));
}

FeatureGrid MockResidualEncoder::similarity_gradient(const Image& img,
                                                     const EmbeddingVector& t) const {
  switch (cfg_.gradients) {
    case GradientMode::kAnalytic:
      return analytic_gradient(backbone_features(img), t);
    case GradientMode::kFiniteDifference:
      return finite_difference_gradient(*this, backbone_features(img), t);
    case GradientMode::kNone:
      break;
  }
  fail(ErrorCode::kGradientsUnsupported, "gradients disabled in the adapter configuration");
}

FeatureGrid MockResidualEncoder::analytic_gradient(const FeatureGrid& grid,
                                                   const EmbeddingVector& t) const {
  const AttentionPoolWeights& w = pool_;
  const Eigen::MatrixXd tokens = grid_to_tokens(grid);
  const int n = static_cast<int>(tokens.rows());
  const int channels = w.channels();
  if (static_cast<int>(t.dim()) != w.embed_dim()) {
    fail(ErrorCode::kDimensionMismatch, "text feature dim does not match the encoder");
  }

  Eigen::MatrixXd x(n + 1, channels);
  x.row(0) = tokens.colwise().mean();
  x.bottomRows(n) = tokens;
  x += w.positional;
  const Eigen::VectorXd q = w.q_proj * x.row(0).transpose() + w.q_bias;
  const Eigen::MatrixXd k = (x * w.k_proj.transpose()).rowwise() + w.k_bias.transpose();
  const Eigen::MatrixXd v = (x * w.v_proj.transpose()).rowwise() + w.v_bias.transpose();

  const int head_dim = channels / w.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  std::vector<Eigen::VectorXd> attn(w.heads);
  Eigen::VectorXd attended(channels);
  for (int h = 0; h < w.heads; ++h) {
    const int off = h * head_dim;
    Eigen::VectorXd logits = k.middleCols(off, head_dim) * q.segment(off, head_dim) * scale;
    logits.array() -= logits.maxCoeff();
    attn[h] = logits.array().exp();
    attn[h] /= attn[h].sum();
    attended.segment(off, head_dim) = v.middleCols(off, head_dim).transpose() * attn[h];
  }
  const Eigen::VectorXd out = w.c_proj * attended + w.c_bias;

  // d cosine(out, t) / d out
  const Eigen::Map<const Eigen::VectorXd> tv(t.values().data(), static_cast<Eigen::Index>(t.dim()));
  const double out_norm = out.norm();
  const double t_norm = tv.norm();
  if (out_norm < kZeroNormEpsilon || t_norm < kZeroNormEpsilon) {
    fail(ErrorCode::kZeroVector, "gradient of cosine at a zero vector");
  }
  const double sim = out.dot(tv) / (out_norm * t_norm);
  const Eigen::VectorXd g_out = tv / (out_norm * t_norm) - sim * out / (out_norm * out_norm);
  const Eigen::VectorXd g_attended = w.c_proj.transpose() * g_out;

  Eigen::MatrixXd g_v = Eigen::MatrixXd::Zero(n + 1, channels);
  Eigen::MatrixXd g_k = Eigen::MatrixXd::Zero(n + 1, channels);
  Eigen::VectorXd g_q = Eigen::VectorXd::Zero(channels);
  for (int h = 0; h < w.heads; ++h) {
    const int off = h * head_dim;
    const Eigen::VectorXd g_head = g_attended.segment(off, head_dim);
    g_v.middleCols(off, head_dim) = attn[h] * g_head.transpose();
    const Eigen::VectorXd g_weights = v.middleCols(off, head_dim) * g_head;
    const double mean_term = attn[h].dot(g_weights);
    const Eigen::VectorXd g_logits =
        attn[h].cwiseProduct((g_weights.array() - mean_term).matrix());
    g_q.segment(off, head_dim) = scale * k.middleCols(off, head_dim).transpose() * g_logits;
    g_k.middleCols(off, head_dim) = scale * g_logits * q.segment(off, head_dim).transpose();
  }
  Eigen::MatrixXd g_x = g_v * w.v_proj + g_k * w.k_proj;
  g_x.row(0) += (w.q_proj.transpose() * g_q).transpose();

  FeatureGrid out_grid(channels, grid.shape(), grid.provenance());
  for (int c = 0; c < channels; ++c) {
    for (int i = 0; i < n; ++i) out_grid.at(c, i) = g_x(i + 1, c) + g_x(0, c) / n;
  }
  return out_grid;
}

// ---------------------------------------------------------------------------
// Patch transformer

MockTransformerEncoder::MockTransformerEncoder(MockEncoderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = EncoderKind::kPatchTransformer;
  cfg_.validate();
  info_ = {cfg_.kind, cfg_.input_resolution, cfg_.grid, cfg_.channels, cfg_.embed_dim, cfg_.layers,
           cfg_.interpolation};

  const int c = cfg_.channels;
  const double s = 1.0 / std::sqrt(static_cast<double>(c));
  detail::StableRng rng(stream_seed(cfg_.seed, "transformer/embed"));
  patch_map_ = random_matrix(rng, c, 3, 1.0 / std::sqrt(3.0));
  patch_bias_ = random_vector(rng, c, 0.1);
  class_embedding_ = random_vector(rng, c, s);
  positional_ = random_matrix(rng, cfg_.grid.cells() + 1, c, s);

  const int hidden = c * cfg_.mlp_ratio;
  for (int l = 0; l < cfg_.layers; ++l) {
    detail::StableRng lrng(stream_seed(cfg_.seed, "transformer/layer" + std::to_string(l)));
    Layer layer;
    layer.ln1_gamma = Eigen::VectorXd::Ones(c) + random_vector(lrng, c, 0.05);
    layer.ln1_beta = random_vector(lrng, c, 0.05);
    layer.ln2_gamma = Eigen::VectorXd::Ones(c) + random_vector(lrng, c, 0.05);
    layer.ln2_beta = random_vector(lrng, c, 0.05);
    layer.wq = random_matrix(lrng, c, c, s);
    layer.wk = random_matrix(lrng, c, c, s);
    layer.wv = random_matrix(lrng, c, c, s);
    layer.wo = random_matrix(lrng, c, c, s);
    layer.bq = random_vector(lrng, c, 0.02);
    layer.bk = random_vector(lrng, c, 0.02);
    layer.bv = random_vector(lrng, c, 0.02);
    layer.bo = random_vector(lrng, c, 0.02);
    layer.w1 = random_matrix(lrng, hidden, c, s);
    layer.b1 = random_vector(lrng, hidden, 0.02);
    layer.w2 = random_matrix(lrng, c, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
    layer.b2 = random_vector(lrng, c, 0.02);
    layers_.push_back(std::move(layer));
  }

  detail::StableRng hrng(stream_seed(cfg_.seed, "transformer/head"));
  post_gamma_ = Eigen::VectorXd::Ones(c) + random_vector(hrng, c, 0.05);
  post_beta_ = random_vector(hrng, c, 0.05);
  proj_ = random_matrix(hrng, cfg_.embed_dim, c, s);
}

TokenState MockTransformerEncoder::embed(const Image& img) const {
  const Image resized =
      resize_image(img, cfg_.input_resolution, cfg_.input_resolution, cfg_.interpolation);
  const Eigen::MatrixXd colors = patch_mean_colors(resized, cfg_.grid);
  Eigen::MatrixXd x(cfg_.grid.cells() + 1, cfg_.channels);
  x.row(0) = class_embedding_.transpose();
  x.bottomRows(cfg_.grid.cells()) =
      (colors * patch_map_.transpose()).rowwise() + patch_bias_.transpose();
  x += positional_;

  TokenState state{std::vector<double>(static_cast<std::size_t>(cfg_.channels)),
                   FeatureGrid(cfg_.channels, cfg_.grid, GridProvenance::kTokenState)};
  matrix_to_state(x, state);
  return state;
}

void MockTransformerEncoder::run_layer(int layer_index, TokenState& state) const {
  if (layer_index < 0 || layer_index >= cfg_.layers) {
    fail(ErrorCode::kEncoderFailure, "layer index " + std::to_string(layer_index) + " out of range");
  }
  if (state.grid.shape() != cfg_.grid || state.grid.channels() != cfg_.channels ||
      static_cast<int>(state.cls.size()) != cfg_.channels) {
    fail(ErrorCode::kEncoderFailure, "token state does not match the encoder");
  }
  const Layer& L = layers_[static_cast<std::size_t>(layer_index)];
  Eigen::MatrixXd x = state_to_matrix(state);

  const Eigen::MatrixXd h = layer_norm(x, L.ln1_gamma, L.ln1_beta);
  const Eigen::MatrixXd q = (h * L.wq.transpose()).rowwise() + L.bq.transpose();
  const Eigen::MatrixXd k = (h * L.wk.transpose()).rowwise() + L.bk.transpose();
  const Eigen::MatrixXd v = (h * L.wv.transpose()).rowwise() + L.bv.transpose();
  const int head_dim = cfg_.channels / cfg_.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
  Eigen::MatrixXd attended(x.rows(), x.cols());
  for (int hd = 0; hd < cfg_.heads; ++hd) {
    const int off = hd * head_dim;
    Eigen::MatrixXd logits =
        q.middleCols(off, head_dim) * k.middleCols(off, head_dim).transpose() * scale;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
      logits.row(r).array() -= logits.row(r).maxCoeff();
      logits.row(r) = logits.row(r).array().exp();
      logits.row(r) /= logits.row(r).sum();
    }
    attended.middleCols(off, head_dim) = logits * v.middleCols(off, head_dim);
  }
  x += (attended * L.wo.transpose()).rowwise() + L.bo.transpose();

  const Eigen::MatrixXd h2 = layer_norm(x, L.ln2_gamma, L.ln2_beta);
  Eigen::MatrixXd hidden = (h2 * L.w1.transpose()).rowwise() + L.b1.transpose();
  hidden = hidden.unaryExpr(&gelu);
  x += (hidden * L.w2.transpose()).rowwise() + L.b2.transpose();

  matrix_to_state(x, state);
}

EmbeddingVector MockTransformerEncoder::head(const TokenState& state) const {
  Eigen::MatrixXd cls(1, cfg_.channels);
  for (int c = 0; c < cfg_.channels; ++c) cls(0, c) = state.cls[c];
  const Eigen::MatrixXd normed = layer_norm(cls, post_gamma_, post_beta_);
  return EmbeddingVector(to_std(proj_ * normed.row(0).transpose()));
}

// ---------------------------------------------------------------------------
// Text

MockTextEncoder::MockTextEncoder(int embed_dim, int max_token_length, std::uint64_t seed)
    : info_{embed_dim, max_token_length}, seed_(seed) {
  if (embed_dim < 1) fail(ErrorCode::kSchemaError, "text embed dim must be positive");
  if (max_token_length < 3) fail(ErrorCode::kSchemaError, "max-tokens must be at least 3");
}

std::string MockTextEncoder::fingerprint() const {
  return "mock-text/d" + std::to_string(info_.embed_dim) + "/t" +
         std::to_string(info_.max_token_length) + "/s" + std::to_string(seed_);
}

EmbeddingVector MockTextEncoder::encode_text(const std::string& text) const {
  std::istringstream in(text);
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  if (words.empty()) fail(ErrorCode::kInvalidArgument, "cannot encode empty text");

  const std::size_t budget = static_cast<std::size_t>(info_.max_token_length - 2);
  if (words.size() > budget) {
    warn("text of " + std::to_string(words.size()) + " tokens truncated to " +
         std::to_string(budget) + ": \"" + text.substr(0, 60) + "\"");
    words.resize(budget);
  }
  std::string key;
  for (const auto& w : words) {
    if (!key.empty()) key += ' ';
    key += w;
  }

  detail::StableRng rng(fnv1a64(key, stream_seed(seed_, "text")));
  std::vector<double> values(static_cast<std::size_t>(info_.embed_dim));
  double norm = 0.0;
  for (double& v : values) {
    v = rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  for (double& v : values) v /= norm;
  return EmbeddingVector(std::move(values));
}

// ---------------------------------------------------------------------------
// Configuration

MockEncoderConfig mock_config_from(const KeyValueConfig& cfg) {
  MockEncoderConfig out;
  const std::string kind = cfg.get_or("kind", "mock-residual");
  if (kind == "mock-residual") {
    out.kind = EncoderKind::kResidualBackbone;
  } else if (kind == "mock-transformer") {
    out.kind = EncoderKind::kPatchTransformer;
  } else {
    fail(ErrorCode::kEncoderFailure,
         "encoder kind '" + kind +
             "' has no built-in loader; supply it through the Python adapter bridge");
  }
  out.input_resolution = cfg.get_int("input-resolution", out.input_resolution);
  if (auto grid = cfg.get("grid")) {
    int rows = 0, cols = 0;
    char sep = 0;
    std::istringstream in(*grid);
    if (!(in >> rows >> sep >> cols) || (sep != 'x' && sep != 'X')) {
      fail(ErrorCode::kSchemaError, "grid must look like 7x7, got '" + *grid + "'");
    }
    out.grid = {rows, cols};
  } else if (cfg.has("stride")) {
    out.grid = VisualEncoderInfo::grid_for(out.input_resolution, cfg.get_int("stride", 32));
  }
  out.channels = cfg.get_int("width", out.channels);
  out.embed_dim = cfg.get_int("embed-dim", out.embed_dim);
  out.layers = cfg.get_int("layers", out.layers);
  out.heads = cfg.get_int("heads", out.heads);
  out.mlp_ratio = cfg.get_int("mlp-ratio", out.mlp_ratio);
  out.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<int>(out.seed)));
  out.max_token_length = cfg.get_int("max-tokens", out.max_token_length);
  out.interpolation = parse_interpolation(cfg.get_or("interpolation", "bilinear"));
  const std::string grads = cfg.get_or("gradients", "analytic");
  if (grads == "analytic") {
    out.gradients = GradientMode::kAnalytic;
  } else if (grads == "finite-difference") {
    out.gradients = GradientMode::kFiniteDifference;
  } else if (grads == "none") {
    out.gradients = GradientMode::kNone;
  } else {
    fail(ErrorCode::kSchemaError, "gradients must be analytic, finite-difference or none");
  }
  out.validate();
  return out;
}

EncoderPair make_encoders(const KeyValueConfig& cfg) {
  const MockEncoderConfig mock = mock_config_from(cfg);
  EncoderPair pair;
  if (mock.kind == EncoderKind::kResidualBackbone) {
    pair.visual = std::make_shared<MockResidualEncoder>(mock);
  } else {
    pair.visual = std::make_shared<MockTransformerEncoder>(mock);
  }
  pair.text = std::make_shared<MockTextEncoder>(mock.embed_dim, mock.max_token_length, mock.seed);

  KeyValueConfig& r = pair.resolved;
  r.set("kind", mock.kind == EncoderKind::kResidualBackbone ? "mock-residual" : "mock-transformer");
  r.set("input-resolution", std::to_string(mock.input_resolution));
  r.set("grid", std::to_string(mock.grid.rows) + "x" + std::to_string(mock.grid.cols));
  r.set("width", std::to_string(mock.channels));
  r.set("embed-dim", std::to_string(mock.embed_dim));
  r.set("layers", std::to_string(mock.kind == EncoderKind::kPatchTransformer ? mock.layers : 0));
  r.set("heads", std::to_string(mock.heads));
  r.set("seed", std::to_string(mock.seed));
  r.set("max-tokens", std::to_string(mock.max_token_length));
  r.set("interpolation", interpolation_name(mock.interpolation));
  r.set("gradients", mock.gradients == GradientMode::kAnalytic           ? "analytic"
                     : mock.gradients == GradientMode::kFiniteDifference ? "finite-difference"
                                                                         : "none");
  return pair;
}

EncoderPair load_encoders(const std::filesystem::path& path) {
  return make_encoders(KeyValueConfig::load(path));
}

}  // namespace gk
