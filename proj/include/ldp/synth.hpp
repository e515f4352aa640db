#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ldp/document.hpp"

namespace ldp {

// Glyph inventory constants shared by every pseudo-language.
constexpr int kGlyphCount = 40;  // inventory size G
constexpr int kGlyphSize = 7;    // g x g binary bitmaps
constexpr int kCellPitch = 8;    // glyph box plus 1px spacing
constexpr int kWordGap = 5;      // blank pixels between words
constexpr int kMaxWordLen = 8;

constexpr int kFictionalLanguageId = -1;

// Glyph index <-> text character ('a'..'z' then 'A'..'N').
char glyph_char(int glyph_id);
int char_glyph(char c);

// A procedurally generated language: glyph bitmaps plus a small lexicon.
// Languages differ in glyph shapes and stroke statistics; word lengths and
// every layout-visible quantity are shared so that geometry never identifies
// the language.
struct PseudoLanguage {
    int language_id = 0;
    int glyph_size = kGlyphSize;
    std::vector<std::vector<uint8_t>> glyphs;  // kGlyphCount bitmaps, row-major 0/1
    std::vector<double> char_frequencies;      // size kGlyphCount, sums to 1
    std::vector<double> word_length_distribution;  // lengths 1..kMaxWordLen
    double stroke_density = 0.5;  // style bias: target ink fraction of the cell
    uint8_t ink_value = 0;        // style bias: stroke intensity (0 = black)
    int active_w = kGlyphSize;    // style bias: horizontal stroke-run cap
    int active_h = kGlyphSize;    // style bias: vertical stroke-run cap
    std::vector<std::string> content_words;   // lexicon, shared length skeleton
    std::vector<std::string> question_words;  // key-like words opening questions
};

struct CorpusConfig {
    int num_languages = 6;
    int docs_per_language = 50;
    int image_size = 128;
    uint64_t layout_seed = 0;
    double label_noise_rate = 0.0;
};

struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Deterministic in (master_seed, language_id). language_id may be
// kFictionalLanguageId for the shared inventory used by the decoupler.
PseudoLanguage make_language(uint64_t master_seed, int language_id);

// One form-like page: a shaded bold header, question/answer rows, and loose
// OTHER lines. Layout and text-slot choices depend only on (doc_seed, cfg);
// the language contributes glyph pixels.
Document generate_document(const PseudoLanguage& lang, uint64_t doc_seed,
                           const CorpusConfig& cfg);

struct CorpusSplits {
    Dataset train;
    Dataset test;
};

// num_languages x docs_per_language documents; the first 80% of each
// language's indices go to train, the rest to test.
CorpusSplits generate_corpus(uint64_t master_seed, const CorpusConfig& cfg);

// Bold variant of a glyph bitmap: one-pixel morphological dilation with a
// horizontal structuring element, clipped to the cell. Full 8-neighborhood
// dilation would saturate dense glyphs into unrecognizable solid blocks.
std::vector<uint8_t> embolden_bitmap(const std::vector<uint8_t>& bits, int g);

// Stamp a glyph bitmap into the image with the cell's top-left at (x, y),
// scaled to the cell box if it is not g x g.
void stamp_glyph(GrayImage& img, const BBox& cell, const std::vector<uint8_t>& bits,
                 int g, uint8_t ink);

}  // namespace ldp
