#include "ldp/decouple.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <stdexcept>

#include "ldp/rng.hpp"

namespace ldp {

std::string decouple_mode_name(DecoupleMode m) {
    switch (m) {
        case DecoupleMode::Resample: return "resample";
        case DecoupleMode::Substitute: return "substitute";
        case DecoupleMode::Hybrid: return "hybrid";
    }
    return "hybrid";
}

DecoupleMode decouple_mode_from_name(const std::string& s) {
    if (s == "resample") return DecoupleMode::Resample;
    if (s == "substitute") return DecoupleMode::Substitute;
    if (s == "hybrid") return DecoupleMode::Hybrid;
    throw std::runtime_error("unknown decouple mode: " + s);
}

GrayImage resample_through(const GrayImage& img, int resolution) {
    if (resolution < 1) throw std::runtime_error("decouple resolution must be >= 1");
    const int longest = std::max(img.width, img.height);
    if (resolution == longest) return img;
    int dw, dh;
    if (img.width >= img.height) {
        dw = resolution;
        dh = std::max(1, int(std::lround(double(img.height) * resolution / img.width)));
    } else {
        dh = resolution;
        dw = std::max(1, int(std::lround(double(img.width) * resolution / img.height)));
    }
    return resize_bilinear(resize_bilinear(img, dw, dh), img.width, img.height);
}

namespace {

// Most common non-cell intensity inside the entry box; the 1px pad ring
// around the cells always provides samples.
uint8_t entry_background(const GrayImage& img, const Entry& e) {
    std::array<uint32_t, 256> histo{};
    for (int y = e.box.y0; y < e.box.y1; ++y) {
        for (int x = e.box.x0; x < e.box.x1; ++x) {
            bool in_cell = false;
            for (const GlyphCell& c : e.cells) {
                if (x >= c.box.x0 && x < c.box.x1 && y >= c.box.y0 && y < c.box.y1) {
                    in_cell = true;
                    break;
                }
            }
            if (!in_cell) ++histo[img.at(x, y)];
        }
    }
    int best = 255;
    uint32_t best_count = 0;
    for (int v = 0; v < 256; ++v) {
        if (histo[v] > best_count) {
            best_count = histo[v];
            best = v;
        }
    }
    return uint8_t(best);
}

}  // namespace

namespace {

GrayImage substitute_fraction(const Document& doc, const PseudoLanguage& fictional,
                              uint64_t seed, double fraction) {
    GrayImage out = doc.image;
    const BBox page{0, 0, out.width, out.height};
    Rng rng(mix_seed({seed, 0x5B57u}));
    for (const Entry& e : doc.entries) {
        if (e.cells.empty()) continue;
        const uint8_t bg = entry_background(out, e);
        // The renderer couples bold strokes with the shaded band, so the band
        // background identifies the stroke weight.
        const bool bold = bg < 240;
        for (const GlyphCell& c : e.cells) {
            if (!page.contains(c.box) || !c.box.valid())
                throw std::runtime_error("cell " + c.box.str() +
                                         " outside image in '" + doc.id + "'");
            if (fraction < 1.0 && !rng.chance(fraction)) continue;
            const int pick = int(rng.below(uint64_t(fictional.glyphs.size())));
            out.fill_rect(c.box, bg);
            const auto& bits = fictional.glyphs[pick];
            if (bold)
                stamp_glyph(out, c.box, embolden_bitmap(bits, fictional.glyph_size),
                            fictional.glyph_size, fictional.ink_value);
            else
                stamp_glyph(out, c.box, bits, fictional.glyph_size, fictional.ink_value);
        }
    }
    return out;
}

}  // namespace

GrayImage substitute_glyphs(const Document& doc, const PseudoLanguage& fictional,
                            uint64_t seed) {
    return substitute_fraction(doc, fictional, seed, 1.0);
}

double hybrid_substitution_fraction(int resolution, int longest_side) {
    const double r = double(resolution) / double(longest_side);
    return 1.0 - r * r * std::sqrt(r);
}

Document decouple_document(const Document& doc, const DecoupleConfig& cfg,
                           const PseudoLanguage& fictional) {
    const int longest = std::max(doc.image.width, doc.image.height);
    if (cfg.resolution < 1 || cfg.resolution > longest)
        throw std::runtime_error("decouple resolution " +
                                 std::to_string(cfg.resolution) +
                                 " outside [1, " + std::to_string(longest) + "]");
    Document out = doc;
    switch (cfg.mode) {
        case DecoupleMode::Resample:
            out.image = resample_through(doc.image, cfg.resolution);
            break;
        case DecoupleMode::Substitute:
            out.image = substitute_glyphs(doc, fictional, cfg.seed);
            break;
        case DecoupleMode::Hybrid: {
            const double fraction = hybrid_substitution_fraction(cfg.resolution, longest);
            out.image = resample_through(
                substitute_fraction(doc, fictional, cfg.seed, fraction),
                cfg.resolution);
            break;
        }
    }
    out.provenance = {true, cfg.resolution};
    return out;
}

Dataset decouple_dataset(const Dataset& ds, const DecoupleConfig& cfg,
                         const PseudoLanguage& fictional) {
    Dataset out;
    out.split = ds.split;
    out.documents.reserve(ds.documents.size());
    for (const Document& doc : ds.documents) {
        DecoupleConfig per_doc = cfg;
        per_doc.seed = mix_seed({cfg.seed, hash_str(doc.id)});
        out.documents.push_back(decouple_document(doc, per_doc, fictional));
    }
    return out;
}

}  // namespace ldp
