#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grounding_kit/error.hpp"

namespace gk {

struct GridShape {
  int rows = 0;
  int cols = 0;

  int cells() const { return rows * cols; }
  friend bool operator==(const GridShape&, const GridShape&) = default;
};

/// RGB image, 8 bits per channel, row-major interleaved.
class Image {
 public:
  Image() = default;
  Image(int height, int width, std::vector<std::uint8_t> rgb, std::string id = {});
  /// Uniformly filled image.
  static Image filled(int height, int width, std::uint8_t r, std::uint8_t g, std::uint8_t b,
                      std::string id = {});

  int height() const { return height_; }
  int width() const { return width_; }
  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  std::uint8_t at(int row, int col, int channel) const {
    return rgb_[(static_cast<std::size_t>(row) * width_ + col) * 3 + channel];
  }
  std::uint8_t& at(int row, int col, int channel) {
    return rgb_[(static_cast<std::size_t>(row) * width_ + col) * 3 + channel];
  }
  std::span<const std::uint8_t> data() const { return rgb_; }

  friend bool operator==(const Image& a, const Image& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.rgb_ == b.rgb_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> rgb_;
  std::string id_;
};

enum class MaskSource { kProposal, kGroundTruth };

/// Binary instance mask over an image, row-major.
class MaskProposal {
 public:
  MaskProposal() = default;
  MaskProposal(int height, int width, MaskSource source = MaskSource::kProposal);
  MaskProposal(int height, int width, std::vector<std::uint8_t> bits,
               MaskSource source = MaskSource::kProposal);

  static MaskProposal full(int height, int width, MaskSource source = MaskSource::kProposal);

  int height() const { return height_; }
  int width() const { return width_; }
  MaskSource source() const { return source_; }
  void set_source(MaskSource source) { source_ = source; }

  bool at(int row, int col) const {
    return bits_[static_cast<std::size_t>(row) * width_ + col] != 0;
  }
  void set(int row, int col, bool on) {
    bits_[static_cast<std::size_t>(row) * width_ + col] = on ? 1 : 0;
  }
  std::span<const std::uint8_t> bits() const { return bits_; }

  std::size_t area() const;
  bool empty() const { return area() == 0; }

  // Source is provenance, not content.
  friend bool operator==(const MaskProposal& a, const MaskProposal& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.bits_ == b.bits_;
  }

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<std::uint8_t> bits_;
  MaskSource source_ = MaskSource::kProposal;
};

/// Mask aligned to a feature grid. Built by resize_mask_to_grid.
class GridMask {
 public:
  GridMask() = default;
  GridMask(GridShape shape, std::vector<std::uint8_t> bits);
  static GridMask ones(GridShape shape);

  GridShape shape() const { return shape_; }
  bool at(int row, int col) const {
    return bits_[static_cast<std::size_t>(row) * shape_.cols + col] != 0;
  }
  bool at(int cell) const { return bits_[static_cast<std::size_t>(cell)] != 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  int count() const;

  friend bool operator==(const GridMask&, const GridMask&) = default;

 private:
  GridShape shape_;
  std::vector<std::uint8_t> bits_;
};

/// Feature in the shared image-text space. Stored unnormalized.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }
  double norm() const;
  EmbeddingVector scaled(double factor) const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

enum class GridProvenance { kBackbone, kTokenState };

/// C x h x w tensor, channel-major.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int channels, GridShape shape, GridProvenance provenance = GridProvenance::kBackbone);
  FeatureGrid(int channels, GridShape shape, std::vector<double> values,
              GridProvenance provenance = GridProvenance::kBackbone);

  int channels() const { return channels_; }
  GridShape shape() const { return shape_; }
  GridProvenance provenance() const { return provenance_; }

  double at(int channel, int cell) const {
    return values_[static_cast<std::size_t>(channel) * shape_.cells() + cell];
  }
  double& at(int channel, int cell) {
    return values_[static_cast<std::size_t>(channel) * shape_.cells() + cell];
  }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Channel vector of one cell.
  std::vector<double> cell(int cell) const;

  friend bool operator==(const FeatureGrid& a, const FeatureGrid& b) {
    return a.channels_ == b.channels_ && a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  int channels_ = 0;
  GridShape shape_;
  std::vector<double> values_;
  GridProvenance provenance_ = GridProvenance::kBackbone;
};

/// alpha weighs visual global vs local context, beta textual global vs local.
struct FusionWeights {
  double alpha = 0.95;
  double beta = 0.5;

  void validate() const;
};

class Expression {
 public:
  explicit Expression(std::string text, std::string id = {});

  const std::string& text() const { return text_; }
  const std::string& id() const { return id_; }

 private:
  std::string text_;
  std::string id_;
};

struct ScoreBreakdown {
  double global = 0.0;
  double local = 0.0;
};

struct ScoredMask {
  int proposal_index = 0;
  double score = 0.0;
  std::optional<ScoreBreakdown> breakdown;
  bool empty_proposal = false;  // score holds the -inf sentinel
};

inline constexpr double kZeroNormEpsilon = 1e-12;

double cosine(const EmbeddingVector& a, const EmbeddingVector& b,
              double epsilon = kZeroNormEpsilon);

/// w * a + (1 - w) * b.
EmbeddingVector fuse(const EmbeddingVector& a, const EmbeddingVector& b, double w);

}  // namespace gk
