#include "grounding_kit/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gk {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kWeightOutOfRange: return "WeightOutOfRange";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEncoderFailure: return "EncoderFailure";
    case ErrorCode::kGradientsUnsupported: return "GradientsUnsupported";
    case ErrorCode::kSurgeryUnsupported: return "SurgeryUnsupported";
    case ErrorCode::kEmptyMask: return "EmptyMask";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kMalformedParse: return "MalformedParse";
    case ErrorCode::kSelectionImpossible: return "SelectionImpossible";
    case ErrorCode::kMalformedRle: return "MalformedRle";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Image::Image(int height, int width, std::vector<std::uint8_t> rgb, std::string id)
    : height_(height), width_(width), rgb_(std::move(rgb)), id_(std::move(id)) {
  if (height < 1 || width < 1) {
    fail(ErrorCode::kInvalidArgument, "image dimensions must be positive");
  }
  if (rgb_.size() != static_cast<std::size_t>(height) * width * 3) {
    fail(ErrorCode::kShapeMismatch, "pixel buffer size does not match " +
                                        std::to_string(height) + "x" + std::to_string(width) +
                                        "x3");
  }
}

Image Image::filled(int height, int width, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                    std::string id) {
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(height) * width * 3);
  for (std::size_t i = 0; i < rgb.size(); i += 3) {
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }
  return Image(height, width, std::move(rgb), std::move(id));
}

MaskProposal::MaskProposal(int height, int width, MaskSource source)
    : MaskProposal(height, width,
                   std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(height, 0)) *
                                             std::max(width, 0)),
                   source) {}

MaskProposal::MaskProposal(int height, int width, std::vector<std::uint8_t> bits,
                           MaskSource source)
    : height_(height), width_(width), bits_(std::move(bits)), source_(source) {
  if (height < 1 || width < 1) {
    fail(ErrorCode::kInvalidArgument, "mask dimensions must be positive");
  }
  if (bits_.size() != static_cast<std::size_t>(height) * width) {
    fail(ErrorCode::kShapeMismatch, "mask buffer size does not match " +
                                        std::to_string(height) + "x" + std::to_string(width));
  }
  for (auto& b : bits_) {
    if (b > 1) fail(ErrorCode::kInvalidArgument, "mask values must be 0 or 1");
  }
}

MaskProposal MaskProposal::full(int height, int width, MaskSource source) {
  return MaskProposal(height, width,
                      std::vector<std::uint8_t>(static_cast<std::size_t>(height) * width, 1),
                      source);
}

std::size_t MaskProposal::area() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

GridMask::GridMask(GridShape shape, std::vector<std::uint8_t> bits)
    : shape_(shape), bits_(std::move(bits)) {
  if (shape.rows < 1 || shape.cols < 1 ||
      bits_.size() != static_cast<std::size_t>(shape.cells())) {
    fail(ErrorCode::kShapeMismatch, "grid mask size does not match its shape");
  }
}

GridMask GridMask::ones(GridShape shape) {
  return GridMask(shape, std::vector<std::uint8_t>(static_cast<std::size_t>(shape.cells()), 1));
}

int GridMask::count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "embedding has non-finite entry");
  }
}

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return EmbeddingVector(std::move(out));
}

FeatureGrid::FeatureGrid(int channels, GridShape shape, GridProvenance provenance)
    : FeatureGrid(channels, shape,
                  std::vector<double>(static_cast<std::size_t>(std::max(channels, 0)) *
                                      std::max(shape.cells(), 0)),
                  provenance) {}

FeatureGrid::FeatureGrid(int channels, GridShape shape, std::vector<double> values,
                         GridProvenance provenance)
    : channels_(channels), shape_(shape), values_(std::move(values)), provenance_(provenance) {
  if (channels < 1 || shape.rows < 1 || shape.cols < 1) {
    fail(ErrorCode::kInvalidArgument, "feature grid dimensions must be positive");
  }
  if (values_.size() != static_cast<std::size_t>(channels) * shape.cells()) {
    fail(ErrorCode::kShapeMismatch, "feature grid buffer does not match C x h x w");
  }
}

std::vector<double> FeatureGrid::cell(int cell) const {
  std::vector<double> out(static_cast<std::size_t>(channels_));
  for (int c = 0; c < channels_; ++c) out[c] = at(c, cell);
  return out;
}

void FusionWeights::validate() const {
  auto in_unit = [](double w) { return w >= 0.0 && w <= 1.0; };
  if (!in_unit(alpha)) fail(ErrorCode::kWeightOutOfRange, "alpha must lie in [0, 1]");
  if (!in_unit(beta)) fail(ErrorCode::kWeightOutOfRange, "beta must lie in [0, 1]");
}

Expression::Expression(std::string text, std::string id)
    : text_(std::move(text)), id_(std::move(id)) {
  if (text_.find_first_not_of(" \t\r\n\f\v") == std::string::npos) {
    fail(ErrorCode::kInvalidArgument, "expression is empty after trimming whitespace");
  }
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b, double epsilon) {
  if (a.dim() != b.dim()) {
    fail(ErrorCode::kDimensionMismatch,
         "cosine of vectors with dims " + std::to_string(a.dim()) + " and " +
             std::to_string(b.dim()));
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na < epsilon || nb < epsilon) fail(ErrorCode::kZeroVector, "cosine of a zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) dot += a[i] * b[i];
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

EmbeddingVector fuse(const EmbeddingVector& a, const EmbeddingVector& b, double w) {
  if (a.dim() != b.dim()) {
    fail(ErrorCode::kDimensionMismatch, "fuse of vectors with different dims");
  }
  if (!(w >= 0.0 && w <= 1.0)) fail(ErrorCode::kWeightOutOfRange, "fusion weight outside [0, 1]");
  std::vector<double> out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = w * a[i] + (1.0 - w) * b[i];
  return EmbeddingVector(std::move(out));
}

}  // namespace gk
