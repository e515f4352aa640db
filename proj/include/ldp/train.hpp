#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ldp/document.hpp"
#include "ldp/metrics.hpp"
#include "ldp/model.hpp"

namespace ldp {

enum class Phase : uint8_t { Pretrain = 0, Finetune = 1 };

struct TrainConfig {
    Phase phase = Phase::Pretrain;
    std::string data_path;   // provenance only
    int steps = -1;          // optimizer updates; derived from epochs when < 0
    int epochs = -1;
    int batch = 32;
    double base_lr = 2e-4;
    uint64_t seed = 0;
    LkiPlacement lki = LkiPlacement::None;  // fine-tune placement
    int box_truncation = 512;               // pretraining cap; 0 = unlimited
    bool allow_raw = false;  // permit raw-provenance pretraining data
    int stop_after = -1;     // pause mid-run at this step; resume later
    ModelConfig model;       // architecture (mtim flag included)
};

// A trained (or training) model: parameters, optimizer moments, and the
// configuration that produced it.
struct Checkpoint {
    static constexpr uint32_t kVersion = 1;

    Model model;
    std::map<std::string, std::vector<double>> opt_m, opt_v;  // Adam moments
    TrainConfig cfg;    // provenance
    int64_t step = 0;   // optimizer steps taken
    int64_t total_steps = 0;
};

// Per-box cross-entropy on the decoupled corpus; the text modality is never
// read. Boxes beyond cfg.box_truncation are dropped.
Checkpoint pretrain(const Dataset& train, const TrainConfig& cfg);

// Continues from a pretrained (or paused fine-tune) checkpoint with fusion
// parameters created zero-initialized; all boxes are kept.
Checkpoint finetune(const Checkpoint& start, const Dataset& train, const TrainConfig& cfg);

// Continue a paused run to its planned end on the same dataset.
Checkpoint resume_training(const Checkpoint& paused, const Dataset& train,
                           int stop_after = -1);

// Per-box argmax predictions scored per language and pooled. When
// `predictions` is non-null it receives one label per box per document.
MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& test,
                       std::vector<std::vector<EntityLabel>>* predictions = nullptr);

// Binary format: magic "LDPC", u32 version, u32 tensor count, then per
// tensor u16 name length, name bytes, u8 rank, u64 dims, f64 LE payload.
// Model parameters, optimizer moments, and numeric provenance all travel as
// named tensors.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ldp
