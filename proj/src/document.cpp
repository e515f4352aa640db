#include "ldp/document.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

namespace ldp {

using nlohmann::json;

std::string label_name(EntityLabel l) {
    switch (l) {
        case EntityLabel::Header: return "HEADER";
        case EntityLabel::Question: return "QUESTION";
        case EntityLabel::Answer: return "ANSWER";
        case EntityLabel::Other: return "OTHER";
    }
    return "OTHER";
}

std::optional<EntityLabel> label_from_name(const std::string& s) {
    if (s == "HEADER") return EntityLabel::Header;
    if (s == "QUESTION") return EntityLabel::Question;
    if (s == "ANSWER") return EntityLabel::Answer;
    if (s == "OTHER") return EntityLabel::Other;
    return std::nullopt;
}

std::string Provenance::str() const {
    if (!decoupled) return "raw";
    return "decoupled(" + std::to_string(decouple_resolution) + ")";
}

Provenance Provenance::parse(const std::string& s) {
    if (s == "raw") return {};
    if (s.rfind("decoupled(", 0) == 0 && s.back() == ')') {
        Provenance p;
        p.decoupled = true;
        p.decouple_resolution = std::stoi(s.substr(10, s.size() - 11));
        return p;
    }
    throw std::runtime_error("unknown provenance: " + s);
}

std::vector<int> Dataset::language_ids() const {
    std::set<int> ids;
    for (const Document& d : documents) ids.insert(d.language_id);
    return {ids.begin(), ids.end()};
}

namespace {

[[noreturn]] void invalid(const Document& doc, const std::string& why) {
    throw std::runtime_error("invalid document '" + doc.id + "': " + why);
}

}  // namespace

void validate_document(const Document& doc) {
    if (doc.id.empty()) invalid(doc, "empty id");
    if (doc.image.width <= 0 || doc.image.height <= 0) invalid(doc, "empty image");
    if (doc.image.pixels.size() != size_t(doc.image.width) * size_t(doc.image.height))
        invalid(doc, "pixel count does not match dimensions");
    if (doc.entries.empty()) invalid(doc, "no entries");
    const BBox page{0, 0, doc.image.width, doc.image.height};
    for (size_t i = 0; i < doc.entries.size(); ++i) {
        const Entry& e = doc.entries[i];
        if (!e.box.valid() || !page.contains(e.box))
            invalid(doc, "entry " + std::to_string(i) + " box " + e.box.str() +
                             " out of bounds or degenerate");
        size_t chars = 0;
        for (char c : e.text)
            if (c != ' ') ++chars;
        if (chars != e.cells.size())
            invalid(doc, "entry " + std::to_string(i) + " has " +
                             std::to_string(e.cells.size()) + " cells for " +
                             std::to_string(chars) + " non-space characters");
        for (size_t j = 0; j < e.cells.size(); ++j) {
            const GlyphCell& c = e.cells[j];
            if (!c.box.valid() || !e.box.contains(c.box))
                invalid(doc, "cell " + std::to_string(j) + " of entry " +
                                 std::to_string(i) + " outside its entry box");
            for (size_t k = j + 1; k < e.cells.size(); ++k)
                if (c.box.intersects(e.cells[k].box))
                    invalid(doc, "overlapping cells in entry " + std::to_string(i));
        }
        for (size_t j = i + 1; j < doc.entries.size(); ++j)
            if (e.box.intersects(doc.entries[j].box))
                invalid(doc, "entries " + std::to_string(i) + " and " +
                                 std::to_string(j) + " overlap");
    }
}

namespace {

json box_to_json(const BBox& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

BBox box_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) throw std::runtime_error("bad box in manifest");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::set<std::string> ids;
    for (const Document& d : ds.documents) {
        validate_document(d);
        if (!ids.insert(d.id).second)
            throw std::runtime_error("duplicate document id '" + d.id + "'");
    }

    std::filesystem::create_directories(dir);
    json docs = json::array();
    for (const Document& d : ds.documents) {
        json entries = json::array();
        for (const Entry& e : d.entries) {
            json cells = json::array();
            for (const GlyphCell& c : e.cells)
                cells.push_back({{"box", box_to_json(c.box)}, {"glyph_id", c.glyph_id}});
            entries.push_back({{"box", box_to_json(e.box)},
                               {"text", e.text},
                               {"label", label_name(e.label)},
                               {"cells", cells}});
        }
        docs.push_back({{"id", d.id},
                        {"image", d.id + ".pgm"},
                        {"width", d.image.width},
                        {"height", d.image.height},
                        {"language_id", d.language_id},
                        {"provenance", d.provenance.str()},
                        {"entries", entries}});
    }
    json manifest = {{"version", 1},
                     {"split", ds.split == Split::Train ? "train" : "test"},
                     {"documents", docs}};

    // Images first so a torn write never leaves a manifest pointing nowhere.
    for (const Document& d : ds.documents) write_pgm(d.image, dir / (d.id + ".pgm"));

    std::ofstream out(dir / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("manifest write failed in " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("missing manifest: " + manifest_path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::parse_error& e) {
        // Report the line, not just the byte offset.
        size_t line = 1;
        for (size_t i = 0; i < e.byte && i < text.size(); ++i)
            if (text[i] == '\n') ++line;
        throw std::runtime_error("malformed manifest " + manifest_path.string() +
                                 " at line " + std::to_string(line) + ": " + e.what());
    }

    if (manifest.value("version", 0) != 1)
        throw std::runtime_error("unsupported manifest version in " +
                                 manifest_path.string());

    Dataset ds;
    ds.split = manifest.value("split", "train") == "test" ? Split::Test : Split::Train;
    for (const json& jd : manifest.at("documents")) {
        Document d;
        d.id = jd.at("id").get<std::string>();
        d.language_id = jd.at("language_id").get<int>();
        d.provenance = Provenance::parse(jd.at("provenance").get<std::string>());

        const auto img_path = dir / jd.at("image").get<std::string>();
        if (!std::filesystem::exists(img_path))
            throw std::runtime_error("missing image file: " + img_path.string());
        d.image = read_pgm(img_path);
        if (d.image.width != jd.at("width").get<int>() ||
            d.image.height != jd.at("height").get<int>())
            throw std::runtime_error(
                "dimension mismatch for '" + d.id + "': manifest says " +
                std::to_string(jd.at("width").get<int>()) + "x" +
                std::to_string(jd.at("height").get<int>()) + ", image is " +
                std::to_string(d.image.width) + "x" + std::to_string(d.image.height));

        for (const json& je : jd.at("entries")) {
            Entry e;
            e.box = box_from_json(je.at("box"));
            e.text = je.at("text").get<std::string>();
            auto label = label_from_name(je.at("label").get<std::string>());
            if (!label)
                throw std::runtime_error("unknown label '" +
                                         je.at("label").get<std::string>() + "' in '" +
                                         d.id + "'");
            e.label = *label;
            for (const json& jc : je.at("cells"))
                e.cells.push_back({box_from_json(jc.at("box")), jc.at("glyph_id").get<int>()});
            d.entries.push_back(std::move(e));
        }
        validate_document(d);
        ds.documents.push_back(std::move(d));
    }
    return ds;
}

// ---- line merging ----------------------------------------------------------

namespace {

// One merge pass, left to right; returns true when anything merged.
bool merge_pass(std::vector<Word>& words, double gap_threshold) {
    std::sort(words.begin(), words.end(),
              [](const Word& a, const Word& b) { return a.first < b.first; });
    std::vector<Word> lines;
    bool merged_any = false;
    for (const Word& w : words) {
        Word* best = nullptr;
        int best_overlap = 0;
        for (Word& line : lines) {
            if (!line.first.y_overlaps(w.first)) continue;
            const double gap = double(w.first.x0) - double(line.first.x1);
            if (gap > gap_threshold) continue;
            const int overlap = std::min(line.first.y1, w.first.y1) -
                                std::max(line.first.y0, w.first.y0);
            if (!best || overlap > best_overlap) {
                best = &line;
                best_overlap = overlap;
            }
        }
        if (best) {
            best->first = best->first.union_with(w.first);
            best->second += " " + w.second;
            merged_any = true;
        } else {
            lines.push_back(w);
        }
    }
    words = std::move(lines);
    return merged_any;
}

}  // namespace

std::vector<Word> merge_words_to_lines(const std::vector<Word>& words,
                                       double gap_threshold) {
    std::vector<Word> out = words;
    // Iterate to a fixed point: a merge can widen a line's y-interval and
    // make further merges legal.
    while (merge_pass(out, gap_threshold)) {
    }
    return out;
}

std::vector<Word> merge_words_to_lines(const std::vector<Word>& words) {
    std::vector<double> widths;
    for (const Word& w : words) {
        size_t chars = 0;
        for (char c : w.second)
            if (c != ' ') ++chars;
        if (chars > 0) widths.push_back(double(w.first.width()) / double(chars));
    }
    double threshold = 0.0;
    if (!widths.empty()) {
        std::sort(widths.begin(), widths.end());
        threshold = widths[widths.size() / 2];
    }
    return merge_words_to_lines(words, threshold);
}

}  // namespace ldp
