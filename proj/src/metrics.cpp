#include "ldp/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ldp/kernels.hpp"

namespace ldp {

int edit_distance(std::string_view a, std::string_view b) {
    const size_t n = a.size(), m = b.size();
    if (n == 0) return int(m);
    if (m == 0) return int(n);
    std::vector<int> prev(m + 1), cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = int(j);
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = int(i);
        for (size_t j = 1; j <= m; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double recognition_ratio(std::string_view pred, std::string_view gt) {
    if (pred.empty() && gt.empty()) return 1.0;
    return 1.0 - double(edit_distance(pred, gt)) / double(pred.size() + gt.size());
}

namespace {

// Intensity-space template: ink 0, background 255. NCC is invariant to the
// affine intensity changes the band background introduces.
struct Template {
    std::vector<double> centered;  // pixel - mean
    double norm = 0.0;             // sqrt(sum of squares)
};

Template make_template(const std::vector<uint8_t>& bits, int g) {
    Template t;
    t.centered.resize(size_t(g) * g);
    double mean = 0.0;
    for (size_t i = 0; i < t.centered.size(); ++i) {
        t.centered[i] = bits[i] ? 0.0 : 255.0;
        mean += t.centered[i];
    }
    mean /= double(t.centered.size());
    double ss = 0.0;
    for (double& v : t.centered) {
        v -= mean;
        ss += v * v;
    }
    t.norm = std::sqrt(ss);
    return t;
}

}  // namespace

std::vector<std::string> ocr_recognize(const Document& doc,
                                       const std::vector<PseudoLanguage>& inventories) {
    // Templates at native glyph size; cells are resampled onto the template
    // grid with the same nearest mapping the renderer uses.
    const int g = inventories.empty() ? kGlyphSize : inventories[0].glyph_size;
    std::vector<Template> templates;  // [inventory][glyph][style] flattened
    for (const PseudoLanguage& inv : inventories) {
        for (const auto& bits : inv.glyphs) {
            templates.push_back(make_template(bits, g));
            templates.push_back(make_template(embolden_bitmap(bits, g), g));
        }
    }

    std::vector<std::string> out;
    out.reserve(doc.entries.size());
    std::vector<double> cell(size_t(g) * g);
    for (const Entry& e : doc.entries) {
        std::string pred;
        for (const GlyphCell& c : e.cells) {
            const int w = c.box.width(), h = c.box.height();
            double mean = 0.0;
            for (int y = 0; y < g; ++y) {
                for (int x = 0; x < g; ++x) {
                    const int sx = (w == g) ? x : x * w / g;
                    const int sy = (h == g) ? y : y * h / g;
                    const double v = double(doc.image.at(c.box.x0 + sx, c.box.y0 + sy));
                    cell[size_t(y) * g + x] = v;
                    mean += v;
                }
            }
            mean /= double(cell.size());
            double ss = 0.0;
            for (double& v : cell) {
                v -= mean;
                ss += v * v;
            }
            const double cell_norm = std::sqrt(ss);

            int best = 0;
            double best_score = -2.0;
            for (size_t t = 0; t < templates.size(); ++t) {
                double score = 0.0;
                if (cell_norm > 0.0 && templates[t].norm > 0.0) {
                    const double dot = kern::ops().dot(
                        cell.data(), templates[t].centered.data(), cell.size());
                    score = dot / (cell_norm * templates[t].norm);
                }
                if (score > best_score) {
                    best_score = score;
                    best = int(t);
                }
            }
            pred += glyph_char((best / 2) % kGlyphCount);
        }
        out.push_back(std::move(pred));
    }
    return out;
}

double mean_recognition_ratio(const Dataset& ds,
                              const std::vector<PseudoLanguage>& inventories) {
    double total = 0.0;
    size_t count = 0;
    for (const Document& doc : ds.documents) {
        const auto preds = ocr_recognize(doc, inventories);
        for (size_t i = 0; i < doc.entries.size(); ++i) {
            std::string gt;
            for (char c : doc.entries[i].text)
                if (c != ' ') gt += c;
            total += recognition_ratio(preds[i], gt);
            ++count;
        }
    }
    return count ? total / double(count) : 0.0;
}

F1Scores entity_f1(const std::vector<EntityLabel>& preds,
                   const std::vector<EntityLabel>& golds) {
    if (preds.size() != golds.size())
        throw std::runtime_error("entity_f1: " + std::to_string(preds.size()) +
                                 " predictions vs " + std::to_string(golds.size()) +
                                 " golds");
    size_t tp = 0, pred_pos = 0, gold_pos = 0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const bool p = preds[i] != EntityLabel::Other;
        const bool g = golds[i] != EntityLabel::Other;
        pred_pos += p;
        gold_pos += g;
        tp += (p && g && preds[i] == golds[i]);
    }
    F1Scores s;
    const bool both_empty = pred_pos == 0 && gold_pos == 0;
    s.precision = pred_pos ? double(tp) / double(pred_pos) : (both_empty ? 1.0 : 0.0);
    s.recall = gold_pos ? double(tp) / double(gold_pos) : (both_empty ? 1.0 : 0.0);
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : (both_empty ? 1.0 : 0.0);
    return s;
}

namespace {

std::string cell_str(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

std::string MetricsReport::to_csv() const {
    std::string out = "config_id,recognition_ratio,probe_accuracy,precision,recall,f1\n";
    for (const MetricsRecord& r : records) {
        out += r.config_id + "," + cell_str(r.recognition_ratio) + "," +
               cell_str(r.probe_accuracy) + "," + cell_str(r.precision) + "," +
               cell_str(r.recall) + "," + cell_str(r.f1) + "\n";
    }
    return out;
}

std::string MetricsReport::to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    auto put = [](nlohmann::json& j, const char* key, double v) {
        if (std::isnan(v))
            j[key] = nullptr;
        else
            j[key] = v;
    };
    for (const MetricsRecord& r : records) {
        nlohmann::json j;
        j["config_id"] = r.config_id;
        put(j, "recognition_ratio", r.recognition_ratio);
        put(j, "probe_accuracy", r.probe_accuracy);
        put(j, "precision", r.precision);
        put(j, "recall", r.recall);
        put(j, "f1", r.f1);
        arr.push_back(j);
    }
    return arr.dump(2) + "\n";
}

void MetricsReport::write_csv(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_csv();
}

void MetricsReport::write_json(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << to_json();
}

MetricsReport read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    MetricsReport report;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string field;
        MetricsRecord r;
        std::getline(ss, r.config_id, ',');
        auto next = [&]() {
            field.clear();
            std::getline(ss, field, ',');
            return field.empty() ? std::nan("") : std::stod(field);
        };
        r.recognition_ratio = next();
        r.probe_accuracy = next();
        r.precision = next();
        r.recall = next();
        r.f1 = next();
        report.records.push_back(std::move(r));
    }
    return report;
}

}  // namespace ldp
