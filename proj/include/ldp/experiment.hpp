#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ldp/metrics.hpp"
#include "ldp/model.hpp"

namespace ldp {

enum class Scenario : uint8_t { DecoupleSweep = 0, ZeroShotMatrix = 1, AblationGrid = 2 };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& s);

// One experiment run: the scenario plus the desk-scale knobs. Every cell's
// randomness derives from (seed, cell identity); cells cache their artifacts
// under out_dir so interrupted runs resume.
struct ExperimentSpec {
    Scenario scenario = Scenario::DecoupleSweep;
    std::filesystem::path out_dir = "experiments";
    std::vector<uint64_t> seeds{1, 2, 3};
    uint64_t corpus_seed = 20260810;
    int threads = 1;

    // corpus scale
    int languages = 6;
    int sweep_docs_per_language = 50;   // decouple_sweep corpus
    int pretrain_docs = 300;            // monolingual source-language corpus
    int finetune_docs = 50;
    int test_docs_per_language = 25;
    int source_language = 0;
    std::vector<int> target_languages{1, 2, 3, 4, 5};
    double label_noise_rate = 0.0;

    // decoupling
    std::vector<int> r_grid{128, 96, 64, 48, 32};
    int decouple_resolution = 64;  // pretraining data resolution

    // training
    int pretrain_epochs = 5;
    int finetune_steps = 80;
    int batch = 8;
    double base_lr = 2e-4;
    int probe_epochs = 80;
};

// Executes every (configuration x seed) cell, writes one CSV row per cell
// plus per-configuration means, and returns the same records.
MetricsReport run_experiment(const ExperimentSpec& spec);

// Aggregates per-cell rows (config ids ending in "/s<seed>") into means.
MetricsReport summarize(const MetricsReport& cells);

}  // namespace ldp
