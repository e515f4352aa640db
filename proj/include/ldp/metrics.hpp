#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ldp/document.hpp"
#include "ldp/synth.hpp"

namespace ldp {

// Unit-cost Levenshtein distance.
int edit_distance(std::string_view a, std::string_view b);

// 1 - EditDistance(pred, gt) / (len(pred) + len(gt)); 1.0 when both empty.
double recognition_ratio(std::string_view pred, std::string_view gt);

// Template-matching OCR stand-in: every cell is matched by normalized
// cross-correlation against all glyph templates (normal and bold) of the
// given inventories; ties fall to the lowest (inventory, glyph) index.
// Returns one predicted string per entry, one character per cell.
std::vector<std::string> ocr_recognize(const Document& doc,
                                       const std::vector<PseudoLanguage>& inventories);

// Mean recognition ratio of OCR output against the entries' annotated text
// (spaces stripped, since cells carry no spaces), pooled over all entries.
double mean_recognition_ratio(const Dataset& ds,
                              const std::vector<PseudoLanguage>& inventories);

struct F1Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Micro-averaged over the non-OTHER classes: an entry counts as a true
// positive when pred == gold != OTHER. Empty denominators follow the
// both-zero-counts == 1.0 convention.
F1Scores entity_f1(const std::vector<EntityLabel>& preds,
                   const std::vector<EntityLabel>& golds);

struct MetricsRecord {
    std::string config_id;
    double recognition_ratio = std::nan("");
    double probe_accuracy = std::nan("");
    double precision = std::nan("");
    double recall = std::nan("");
    double f1 = std::nan("");
};

struct MetricsReport {
    std::vector<MetricsRecord> records;

    std::string to_csv() const;
    std::string to_json() const;
    void write_csv(const std::filesystem::path& path) const;
    void write_json(const std::filesystem::path& path) const;
};

// Inverse of write_csv; empty cells come back as NaN.
MetricsReport read_metrics_csv(const std::filesystem::path& path);

}  // namespace ldp
