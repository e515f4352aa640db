#pragma once

#include <cstdint>

#include "ldp/document.hpp"
#include "ldp/synth.hpp"

namespace ldp {

enum class DecoupleMode : uint8_t { Resample = 0, Substitute = 1, Hybrid = 2 };

std::string decouple_mode_name(DecoupleMode m);
DecoupleMode decouple_mode_from_name(const std::string& s);

struct DecoupleConfig {
    DecoupleMode mode = DecoupleMode::Hybrid;
    int resolution = 64;  // longest image side after downsampling
    uint64_t seed = 0;
};

// Round trip through resolution R: bilinear down to longest side R, bilinear
// back up to the original size. R == longest side is the identity.
GrayImage resample_through(const GrayImage& img, int resolution);

// Redraw every glyph cell with a uniformly drawn fictional glyph, keeping the
// cell's background intensity and bold/normal stroke weight; pixels outside
// the cells are untouched.
GrayImage substitute_glyphs(const Document& doc, const PseudoLanguage& fictional,
                            uint64_t seed);

// Fraction of cells the hybrid mode redraws at resolution R: the share of
// glyph detail lost at that working resolution, 1 - (R/longest)^3. Full
// resolution touches nothing; low resolutions fictionalize almost all text.
double hybrid_substitution_fraction(int resolution, int longest_side);

// Geometry, text, labels and cells are copied unchanged; only pixels change.
Document decouple_document(const Document& doc, const DecoupleConfig& cfg,
                           const PseudoLanguage& fictional);

// Per-document seeds derive from (cfg.seed, document id), so the result does
// not depend on processing order.
Dataset decouple_dataset(const Dataset& ds, const DecoupleConfig& cfg,
                         const PseudoLanguage& fictional);

}  // namespace ldp
