#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ldp/geometry.hpp"
#include "ldp/image.hpp"

namespace ldp {

enum class EntityLabel : uint8_t { Header = 0, Question = 1, Answer = 2, Other = 3 };
constexpr int kNumLabels = 4;

std::string label_name(EntityLabel l);
std::optional<EntityLabel> label_from_name(const std::string& s);

// One rendered character: its pixel box and the glyph it was drawn from.
struct GlyphCell {
    BBox box;
    int glyph_id = 0;
    bool operator==(const GlyphCell&) const = default;
};

struct Entry {
    BBox box;
    std::string text;
    EntityLabel label = EntityLabel::Other;
    std::vector<GlyphCell> cells;
    bool operator==(const Entry&) const = default;
};

struct Provenance {
    bool decoupled = false;
    int decouple_resolution = 0;  // meaningful when decoupled
    bool operator==(const Provenance&) const = default;

    std::string str() const;
    static Provenance parse(const std::string& s);
};

struct Document {
    std::string id;
    GrayImage image;
    std::vector<Entry> entries;
    int language_id = 0;
    Provenance provenance;
    bool operator==(const Document&) const = default;
};

enum class Split : uint8_t { Train = 0, Test = 1 };

struct Dataset {
    std::vector<Document> documents;
    Split split = Split::Train;
    bool operator==(const Dataset&) const = default;

    std::vector<int> language_ids() const;  // sorted, deduplicated
};

// Throws std::runtime_error naming the document when an invariant is broken.
void validate_document(const Document& doc);

// Writes manifest.json plus one P5 PGM per document; loading the directory
// reproduces the dataset bit-exactly.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

// DocBank-style line building: words whose vertical intervals overlap and
// whose horizontal gap is at most gap_threshold become one line (union box,
// texts joined by single spaces). Runs to a fixed point, so it is idempotent.
using Word = std::pair<BBox, std::string>;
std::vector<Word> merge_words_to_lines(const std::vector<Word>& words,
                                       double gap_threshold);
// Default threshold: one median glyph width of the input words.
std::vector<Word> merge_words_to_lines(const std::vector<Word>& words);

}  // namespace ldp
