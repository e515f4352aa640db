#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ldp/autograd.hpp"
#include "ldp/document.hpp"

namespace ldp {

enum class LkiPlacement : uint8_t { None = 0, Classifier = 1, Decoder = 2, Both = 3 };

std::string lki_name(LkiPlacement p);
LkiPlacement lki_from_name(const std::string& s);

struct ModelConfig {
    int image_size = 128;
    int patch_size = 8;
    int dim = 64;           // token feature width d
    int enc_layers = 2;
    int dec_layers = 2;
    int tokens_per_box = 4; // K learned output tokens
    int heads = 2;
    int classes = 4;
    int text_dim = 64;      // frozen text embedding width
    int max_boxes_pretrain = 512;
    bool mtim = true;

    int patches_per_side() const { return image_size / patch_size; }
    int num_patches() const { return patches_per_side() * patches_per_side(); }
    int merged_dim() const { return tokens_per_box * dim; }
    int mlp_hidden() const { return 2 * dim; }

    bool operator==(const ModelConfig&) const = default;
};

// Per-box decoder results. merged_per_layer[l][n] is box n's concatenated
// K-token vector after layer l (post cross-box merging when it is enabled);
// final_merged is the last layer's.
struct DecoderState {
    std::vector<std::vector<ag::Tensor>> merged_per_layer;
    std::vector<ag::Tensor> final_merged;
};

// Frozen hashed character n-gram embedding: bigrams and trigrams counted
// into `dim` buckets, L2-normalized; the empty string maps to zero.
std::vector<double> embed_text(const std::string& text, int dim);

class Model {
public:
    ModelConfig cfg;
    LkiPlacement lki = LkiPlacement::None;
    std::map<std::string, ag::Tensor> params;

    static Model init(const ModelConfig& cfg, uint64_t seed);

    // Creates the zero-initialized fusion parameters for a placement; called
    // at fine-tune start so fusion begins as an exact no-op.
    void enable_lki(LkiPlacement placement);

    // Parameters in name order (stable across runs).
    std::vector<ag::Tensor> trainable() const;

    // Patch embedding before positional encoding; translation by a whole
    // patch permutes these rows exactly.
    ag::Tensor patch_tokens(const GrayImage& img) const;
    // Full encoder: patch embedding + 2-D sinusoidal positions + pre-norm
    // transformer blocks + final norm. Rows: num_patches, cols: dim.
    ag::Tensor encode_image(const GrayImage& img) const;

    // Two corner prompt tokens: fixed sinusoidal encoding of the normalized
    // corner coordinates plus a learned corner-type embedding.
    ag::Tensor encode_box(const BBox& box) const;

    // Box-prompted decoding. Cross-box operations run in a canonical
    // geometric order, so permuting the input boxes permutes the outputs
    // bit-exactly. texts are only read by the decoder-placement fusion.
    DecoderState decode(const ag::Tensor& image_features, std::span<const BBox> boxes,
                        std::span<const std::string> texts = {}) const;

    // F_downstream = F_final + Linear(embed_text(text)); identity while the
    // linear is zero or the text is empty.
    ag::Tensor fuse_text(const ag::Tensor& final_merged, const std::string& text) const;

    // Two-layer MLP head over a merged feature; returns C logits.
    ag::Tensor classify(const ag::Tensor& merged) const;

    // Whole pipeline for one document. use_text=false never touches entry
    // text (the pretraining contract). max_boxes 0 means no truncation.
    std::vector<ag::Tensor> forward_logits(const Document& doc, bool use_text,
                                           int max_boxes = 0) const;

private:
    ag::Tensor image_pos_encoding() const;
    const ag::Tensor& param(const std::string& name) const;
};

}  // namespace ldp
