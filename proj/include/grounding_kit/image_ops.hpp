#pragma once

#include <filesystem>
#include <string>

#include "grounding_kit/core.hpp"

namespace gk {

enum class Interpolation { kNearest, kBilinear };

Interpolation parse_interpolation(const std::string& name);
std::string interpolation_name(Interpolation interp);

// Full-frame resize (no aspect-preserving crop), so every mask pixel maps
// into the encoder input.
Image resize_image(const Image& img, int height, int width, Interpolation interp);

/// Loads .png, .ppm (P6/P3).
Image load_image(const std::filesystem::path& path);
/// Writes a lossless image; format chosen from the extension (.png or .ppm).
void save_image(const Image& img, const std::filesystem::path& path);

/// Tints mask pixels with `rgb` at the given opacity and draws the mask outline.
Image overlay_mask(const Image& img, const MaskProposal& mask, std::uint8_t r = 255,
                   std::uint8_t g = 0, std::uint8_t b = 0, double opacity = 0.5);

}  // namespace gk
