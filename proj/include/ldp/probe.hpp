#pragma once

#include <cstdint>
#include <vector>

#include "ldp/autograd.hpp"
#include "ldp/document.hpp"

namespace ldp {

// Small trainable classifier standing in for the language-bias probe:
// images are downsampled to 32x32 and fed through one hidden layer.
struct LanguageProbe {
    static constexpr int kInputSide = 32;
    static constexpr int kHidden = 64;

    std::vector<int> languages;  // class index -> language_id, sorted
    ag::Tensor w1, b1, w2, b2;

    static LanguageProbe init(std::vector<int> languages, uint64_t seed);
    int predict(const GrayImage& img) const;  // class index, lowest wins ties
};

LanguageProbe train_language_probe(const Dataset& train, int epochs, uint64_t seed);
double eval_language_probe(const LanguageProbe& probe, const Dataset& test);

// 32x32 downsample scaled to [0, 1]; shared by training and evaluation.
std::vector<double> probe_features(const GrayImage& img);

}  // namespace ldp
