#include "ldp/synth.hpp"

#include <algorithm>
#include <cmath>

#include "ldp/rng.hpp"

namespace ldp {

namespace {

constexpr uint8_t kInk = 0;
constexpr uint8_t kPaper = 255;
constexpr uint8_t kBandIntensity = 200;

// Lexicon length skeleton, identical for every language. Box geometry is a
// function of character counts, so sharing these keeps layout language-free.
constexpr int kContentLens[] = {2, 3, 4, 5, 2, 3, 4, 6, 5, 3, 7, 4, 8, 3};
constexpr int kQuestionLens[] = {4, 4, 4, 4, 4, 4};
constexpr int kContentWords = int(sizeof(kContentLens) / sizeof(int));
constexpr int kQuestionWords = int(sizeof(kQuestionLens) / sizeof(int));

// Well-spaced stroke densities (ink fraction of the full cell) for the first
// languages, then low-discrepancy. The spacing is what makes languages
// separable to the bias probe on raw renders.
double density_for(int language_id) {
    static const double table[] = {0.24, 0.78, 0.42, 0.62, 0.35, 0.52, 0.70, 0.46};
    if (language_id == kFictionalLanguageId) return 0.48;
    if (language_id < 8) return table[language_id];
    const double x = double(language_id) * 0.61803398874989484820;
    return 0.28 + 0.50 * (x - std::floor(x));
}

// Stroke intensity paired with density (sparse scripts write light, dense
// ones dark) so the two axes compound instead of cancelling.
uint8_t ink_for(int language_id) {
    static const uint8_t table[] = {120, 0, 62, 22, 86, 44, 12, 74};
    if (language_id == kFictionalLanguageId) return 35;
    if (language_id < 8) return table[language_id];
    const double x = double(language_id) * 0.77156117237;
    return uint8_t(110.0 * (x - std::floor(x)));
}

std::vector<uint8_t> make_glyph(uint64_t master_seed, int language_id, int glyph_idx,
                                int run_cap_x, int run_cap_y, double density,
                                uint64_t salt) {
    Rng rng(mix_seed({master_seed, 0x67C1u, uint64_t(language_id + 1),
                      uint64_t(glyph_idx), salt}));
    const int g = kGlyphSize;
    std::vector<uint8_t> bits(size_t(g) * g, 0);
    const int area = g * g;
    // Density targets the full cell, so ink-per-cell tracks the language's
    // density axis independently of stroke anisotropy.
    int target = int(std::lround(density * area)) + int(rng.range(-1, 1));
    target = std::clamp(target, 1, int(area * 0.8));

    // Stroke runs; per-language orientation bias and run-length caps give
    // each language its texture without changing ink totals.
    const int orient = int(mix_seed({master_seed, 0x0A11u, uint64_t(language_id + 1)}) % 3);
    int inked = 0;
    int guard = 0;
    while (inked < target && guard++ < 400) {
        int x = int(rng.below(uint64_t(g)));
        int y = int(rng.below(uint64_t(g)));
        int dx = 0, dy = 0, cap = 2;
        switch (orient) {
            case 0: dx = 1; dy = rng.chance(0.2) ? 1 : 0; cap = run_cap_x; break;
            case 1: dy = 1; dx = rng.chance(0.2) ? 1 : 0; cap = run_cap_y; break;
            default:
                dx = rng.chance(0.5) ? 1 : -1;
                dy = 1;
                cap = std::min(run_cap_x, run_cap_y);
                break;
        }
        const int run = 2 + int(rng.below(uint64_t(std::max(1, cap))));
        for (int s = 0; s < run && inked < target; ++s) {
            const int px = x + s * dx;
            const int py = y + s * dy;
            if (px < 0 || px >= g || py < 0 || py >= g) break;
            uint8_t& b = bits[size_t(py) * g + px];
            if (!b) {
                b = 1;
                ++inked;
            }
        }
    }
    if (inked == 0) bits[0] = 1;
    return bits;
}

std::string make_word(Rng& rng, const std::vector<double>& freqs, int len) {
    std::string w;
    for (int i = 0; i < len; ++i) {
        double u = rng.next_double();
        int pick = kGlyphCount - 1;
        for (int c = 0; c < kGlyphCount; ++c) {
            u -= freqs[c];
            if (u < 0.0) {
                pick = c;
                break;
            }
        }
        w += glyph_char(pick);
    }
    return w;
}

}  // namespace

char glyph_char(int glyph_id) {
    return glyph_id < 26 ? char('a' + glyph_id) : char('A' + glyph_id - 26);
}

int char_glyph(char c) {
    if (c >= 'a' && c <= 'z') return c - 'a';
    return 26 + (c - 'A');
}

std::vector<uint8_t> embolden_bitmap(const std::vector<uint8_t>& bits, int g) {
    std::vector<uint8_t> out(bits);
    for (int y = 0; y < g; ++y)
        for (int x = 0; x + 1 < g; ++x)
            if (bits[size_t(y) * g + x]) out[size_t(y) * g + x + 1] = 1;
    return out;
}

void stamp_glyph(GrayImage& img, const BBox& cell, const std::vector<uint8_t>& bits,
                 int g, uint8_t ink) {
    const int w = cell.width(), h = cell.height();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int bx = (w == g) ? x : x * g / w;
            const int by = (h == g) ? y : y * g / h;
            if (bits[size_t(by) * g + bx]) img.set(cell.x0 + x, cell.y0 + y, ink);
        }
    }
}

PseudoLanguage make_language(uint64_t master_seed, int language_id) {
    if (language_id < kFictionalLanguageId)
        throw GenerationError("language_id must be >= -1");

    PseudoLanguage lang;
    lang.language_id = language_id;
    lang.stroke_density = density_for(language_id);
    lang.ink_value = ink_for(language_id);

    Rng style(mix_seed({master_seed, 0x57EEu, uint64_t(language_id + 1)}));
    if (language_id == kFictionalLanguageId) {
        lang.active_w = kGlyphSize;
        lang.active_h = kGlyphSize;
    } else {
        lang.active_w = 3 + int(style.below(5));
        lang.active_h = 3 + int(style.below(5));
    }

    // Reject a candidate when its normal or bold pattern collides with any
    // earlier glyph's patterns; the OCR oracle depends on both styles being
    // unambiguous within an inventory.
    lang.glyphs.reserve(kGlyphCount);
    std::vector<std::vector<uint8_t>> taken;
    for (int i = 0; i < kGlyphCount; ++i) {
        uint64_t salt = 0;
        std::vector<uint8_t> bits, bold;
        do {
            bits = make_glyph(master_seed, language_id, i, lang.active_w, lang.active_h,
                              lang.stroke_density, salt++);
            bold = embolden_bitmap(bits, kGlyphSize);
        } while (std::find(taken.begin(), taken.end(), bits) != taken.end() ||
                 std::find(taken.begin(), taken.end(), bold) != taken.end() ||
                 bits == bold);
        taken.push_back(bits);
        taken.push_back(bold);
        lang.glyphs.push_back(std::move(bits));
    }

    // Zipf-ish frequencies over a per-language permutation of the inventory.
    std::vector<int> perm(kGlyphCount);
    for (int i = 0; i < kGlyphCount; ++i) perm[i] = i;
    for (int i = kGlyphCount - 1; i > 0; --i)
        std::swap(perm[i], perm[style.below(uint64_t(i + 1))]);
    lang.char_frequencies.assign(kGlyphCount, 0.0);
    double total = 0.0;
    for (int r = 0; r < kGlyphCount; ++r) {
        const double f = 1.0 / double(r + 3);
        lang.char_frequencies[perm[r]] = f;
        total += f;
    }
    for (double& f : lang.char_frequencies) f /= total;

    // Lexicon: lengths fixed by the shared skeleton, characters by language.
    for (int j = 0; j < kContentWords; ++j) {
        std::string w;
        do {
            w = make_word(style, lang.char_frequencies, kContentLens[j]);
        } while (std::find(lang.content_words.begin(), lang.content_words.end(), w) !=
                 lang.content_words.end());
        lang.content_words.push_back(std::move(w));
    }
    for (int j = 0; j < kQuestionWords; ++j) {
        std::string w;
        do {
            w = make_word(style, lang.char_frequencies, kQuestionLens[j]);
        } while (std::find(lang.question_words.begin(), lang.question_words.end(), w) !=
                     lang.question_words.end() ||
                 std::find(lang.content_words.begin(), lang.content_words.end(), w) !=
                     lang.content_words.end());
        lang.question_words.push_back(std::move(w));
    }

    // Word length distribution over one page's fixed word plans; identical
    // across languages.
    lang.word_length_distribution.assign(kMaxWordLen, 0.0);
    const int page_lens[] = {4, 3, 3,            // header
                             4, 2, 4, 2, 4, 2,   // three question rows
                             3, 2, 3, 2, 3, 2,   // their answers
                             3, 2, 3, 2};        // two loose lines
    for (int len : page_lens) lang.word_length_distribution[len - 1] += 1.0;
    for (double& p : lang.word_length_distribution)
        p /= double(sizeof(page_lens) / sizeof(int));

    return lang;
}

// ---- document layout --------------------------------------------------------

namespace {

struct PendingEntry {
    EntityLabel label;
    std::vector<int> word_slots;  // content-word indices; -1 marks a question word
    int question_slot = -1;
    int x = 0, y = 0;
    bool bold = false;
};

int word_width(int chars) { return chars * kCellPitch - 1; }

// Uniform choice among the content slots of a required length. Text varies,
// geometry does not.
int pick_slot_of_len(Rng& rng, int len) {
    int count = 0;
    for (int j = 0; j < kContentWords; ++j) count += kContentLens[j] == len;
    int nth = int(rng.below(uint64_t(count)));
    for (int j = 0; j < kContentWords; ++j) {
        if (kContentLens[j] == len && nth-- == 0) return j;
    }
    return 0;
}

// Word-length plans per entry kind; fixed so every page carries the same
// amount of text and page darkness measures the script alone.
constexpr int kHeaderPlan[] = {4, 3, 3};
constexpr int kQuestionTailPlan[] = {2};  // after the question word
constexpr int kAnswerPlan[] = {2, 2};
constexpr int kOtherPlan[] = {3, 2};
// A loose pair mimics a q/a row in everything except its wider gap; its left
// member is question-shaped but opens with an ordinary word.
constexpr int kPairLeftPlan[] = {4, 2};
constexpr int kPairRightPlan[] = {2, 2};

// Horizontal gaps separate the two row families: key/value rows sit close
// together, loose pairs far apart. The gap is the layout cue that decides
// labels; nothing else distinguishes a loose pair from a q/a row.
constexpr int kNarrowGapMin = 9;   // q/a rows: 9..16
constexpr int kWideGapMin = 22;    // loose pairs: 22..26

template <size_t N>
int plan_width(const int (&plan)[N], int lead_chars = 0) {
    int w = lead_chars > 0 ? word_width(lead_chars) : -kWordGap;
    for (int len : plan) w += kWordGap + word_width(len);
    return w;
}

template <size_t N>
void fill_plan(Rng& rng, std::vector<int>& slots, const int (&plan)[N]) {
    for (int len : plan) slots.push_back(pick_slot_of_len(rng, len));
}

Entry render_entry(GrayImage& img, const PseudoLanguage& lang, const PendingEntry& pe) {
    Entry entry;
    entry.label = pe.label;
    int x = pe.x;
    const int y = pe.y;
    std::string text;
    auto append_word = [&](const std::string& w) {
        if (!text.empty()) {
            text += ' ';
            x += kWordGap;
        }
        for (char c : w) {
            const BBox cell{x, y, x + kGlyphSize, y + kGlyphSize};
            const auto& bits = lang.glyphs[char_glyph(c)];
            if (pe.bold)
                stamp_glyph(img, cell, embolden_bitmap(bits, kGlyphSize), kGlyphSize,
                            lang.ink_value);
            else
                stamp_glyph(img, cell, bits, kGlyphSize, lang.ink_value);
            entry.cells.push_back({cell, char_glyph(c)});
            x += kCellPitch;
        }
        x -= 1;  // no trailing intra-word spacing
        text += w;
    };
    if (pe.question_slot >= 0) append_word(lang.question_words[pe.question_slot]);
    for (int slot : pe.word_slots) append_word(lang.content_words[slot]);
    entry.text = std::move(text);
    entry.box = {pe.x - 1, y - 1, x + 1, y + kGlyphSize + 1};
    return entry;
}

}  // namespace

Document generate_document(const PseudoLanguage& lang, uint64_t doc_seed,
                           const CorpusConfig& cfg) {
    const int size = cfg.image_size;
    const int margin = 6;
    const int limit_x = size - margin;
    const int row_h = kGlyphSize + 2;
    const int band_h = kGlyphSize + 4;

    // All structural draws come from a stream that does not know the
    // language; glyph pixels are the only language-dependent output.
    Rng rs(mix_seed({cfg.layout_seed, doc_seed, 0xD0C5u}));

    if (size < 64) throw GenerationError("image too small for header and q/a rows");

    Document doc;
    doc.id = "d" + std::to_string(doc_seed);
    doc.image = GrayImage(size, size, kPaper);
    doc.language_id = lang.language_id;

    // Fixed text budget per page: one header band, three q/a rows, and two
    // loose lines that either float alone or sit side by side as a pair.
    // Keeping the total amount of text near-constant means page darkness
    // measures the script, not how much happened to be written.
    //
    // Labels stay decidable from layout alone: key/value rows use a narrow
    // horizontal gap, loose pairs a wide one. Question keywords correlate
    // with the narrow-gap rows but never decide the label.
    enum class RowKind { Header, QuestionRow, OtherPair, OtherSingle };
    struct RowPlan {
        RowKind kind;
    };
    const bool paired_others = rs.chance(0.6);
    std::vector<RowPlan> plan;
    plan.push_back({RowKind::Header});
    std::vector<RowPlan> rest;
    for (int i = 0; i < 3; ++i) rest.push_back({RowKind::QuestionRow});
    if (paired_others) {
        rest.push_back({RowKind::OtherPair});
    } else {
        rest.push_back({RowKind::OtherSingle});
        rest.push_back({RowKind::OtherSingle});
    }
    for (int i = int(rest.size()) - 1; i > 0; --i)
        std::swap(rest[i], rest[rs.below(uint64_t(i + 1))]);
    plan.insert(plan.end(), rest.begin(), rest.end());

    std::vector<PendingEntry> pending;
    int y = margin + int(rs.range(0, 3));
    for (const RowPlan& row : plan) {
        if (row.kind == RowKind::Header) {
            if (y + band_h + 1 >= size - margin)
                throw GenerationError("layout overflow: header band does not fit");
            const BBox band{4, y, size - 4, y + band_h};
            doc.image.fill_rect(band, kBandIntensity);
            PendingEntry pe;
            pe.label = EntityLabel::Header;
            pe.bold = true;
            pe.x = 8 + int(rs.range(0, 8));
            pe.y = y + 2;
            fill_plan(rs, pe.word_slots, kHeaderPlan);
            pending.push_back(pe);
            y += band_h + int(rs.range(3, 6));
        } else if (row.kind == RowKind::QuestionRow) {
            if (y + row_h >= size - margin)
                throw GenerationError("layout overflow: q/a row does not fit");
            PendingEntry q;
            q.label = EntityLabel::Question;
            q.x = margin + int(rs.range(0, 5));
            q.y = y + 1;
            q.question_slot = int(rs.below(kQuestionWords));
            fill_plan(rs, q.word_slots, kQuestionTailPlan);
            const int q_width =
                plan_width(kQuestionTailPlan, kQuestionLens[q.question_slot]);
            PendingEntry a;
            a.label = EntityLabel::Answer;
            a.x = q.x + q_width + kNarrowGapMin + int(rs.range(0, 7));
            a.y = q.y;
            fill_plan(rs, a.word_slots, kAnswerPlan);
            if (a.x + plan_width(kAnswerPlan) > limit_x - 1)
                throw GenerationError("q/a row exceeds the right margin");
            pending.push_back(q);
            pending.push_back(a);
            y += row_h + int(rs.range(3, 6));
        } else if (row.kind == RowKind::OtherPair) {
            if (y + row_h >= size - margin)
                throw GenerationError("layout overflow: loose pair does not fit");
            PendingEntry left;
            left.label = EntityLabel::Other;
            left.x = margin + int(rs.range(0, 3));
            left.y = y + 1;
            fill_plan(rs, left.word_slots, kPairLeftPlan);
            PendingEntry right;
            right.label = EntityLabel::Other;
            right.x = left.x + plan_width(kPairLeftPlan) + kWideGapMin + int(rs.range(0, 4));
            right.y = left.y;
            fill_plan(rs, right.word_slots, kPairRightPlan);
            if (right.x + plan_width(kPairRightPlan) > limit_x - 1)
                throw GenerationError("loose pair exceeds the right margin");
            pending.push_back(left);
            pending.push_back(right);
            y += row_h + int(rs.range(3, 6));
        } else {
            if (y + row_h >= size - margin)
                throw GenerationError("layout overflow: loose row does not fit");
            PendingEntry o;
            o.label = EntityLabel::Other;
            o.y = y + 1;
            const bool left_like = rs.chance(0.5);
            o.x = left_like ? margin + int(rs.range(0, 5)) : 40 + int(rs.range(0, 36));
            fill_plan(rs, o.word_slots, kOtherPlan);
            if (o.x + plan_width(kOtherPlan) > limit_x - 1)
                throw GenerationError("loose line exceeds the right margin");
            pending.push_back(o);
            y += row_h + int(rs.range(3, 6));
        }
    }

    int qa_count = 0;
    for (const PendingEntry& pe : pending)
        if (pe.label == EntityLabel::Question) ++qa_count;
    int header_count = 0;
    for (const PendingEntry& pe : pending)
        if (pe.label == EntityLabel::Header) ++header_count;
    if (header_count < 1 || qa_count < 2)
        throw GenerationError("layout overflow: minimum content did not fit");

    for (const PendingEntry& pe : pending)
        doc.entries.push_back(render_entry(doc.image, lang, pe));

    // Pseudo-label noise: resample among the other three labels.
    if (cfg.label_noise_rate > 0.0) {
        for (Entry& e : doc.entries) {
            if (rs.chance(cfg.label_noise_rate)) {
                const int shift = 1 + int(rs.below(3));
                e.label = EntityLabel((int(e.label) + shift) % kNumLabels);
            }
        }
    }
    return doc;
}

CorpusSplits generate_corpus(uint64_t master_seed, const CorpusConfig& cfg) {
    if (cfg.num_languages < 2)
        throw GenerationError("corpus needs at least two languages");
    if (cfg.label_noise_rate < 0.0 || cfg.label_noise_rate > 1.0)
        throw GenerationError("label_noise_rate outside [0, 1]");

    CorpusSplits out;
    out.train.split = Split::Train;
    out.test.split = Split::Test;
    int train_count = cfg.docs_per_language * 4 / 5;
    train_count = std::clamp(train_count, std::min(1, cfg.docs_per_language),
                             std::max(cfg.docs_per_language - 1, 1));
    for (int lang_id = 0; lang_id < cfg.num_languages; ++lang_id) {
        const PseudoLanguage lang = make_language(master_seed, lang_id);
        for (int i = 0; i < cfg.docs_per_language; ++i) {
            const uint64_t doc_seed =
                mix_seed({master_seed, 0xD0C0u, uint64_t(lang_id), uint64_t(i)});
            Document doc = generate_document(lang, doc_seed, cfg);
            doc.id = "l" + std::to_string(lang_id) + "-d" + std::to_string(i);
            (i < train_count ? out.train : out.test).documents.push_back(std::move(doc));
        }
    }
    return out;
}

}  // namespace ldp
