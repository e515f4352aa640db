#include "ldp/probe.hpp"

#include <algorithm>
#include <stdexcept>

#include "ldp/image.hpp"
#include "ldp/optim.hpp"
#include "ldp/rng.hpp"

namespace ldp {

std::vector<double> probe_features(const GrayImage& img) {
    // Area-average downsample: every source pixel lands in exactly one output
    // bucket, so block darkness is measured rather than point-sampled.
    const int side = LanguageProbe::kInputSide;
    std::vector<double> sums(size_t(side) * side, 0.0);
    std::vector<double> counts(size_t(side) * side, 0.0);
    for (int y = 0; y < img.height; ++y) {
        const int oy = std::min(side - 1, y * side / img.height);
        for (int x = 0; x < img.width; ++x) {
            const int ox = std::min(side - 1, x * side / img.width);
            sums[size_t(oy) * side + ox] += double(img.at(x, y));
            counts[size_t(oy) * side + ox] += 1.0;
        }
    }
    // Centered so the class signal is not dwarfed by the paper-white mean;
    // the shift is global, so absolute intensity cues survive.
    for (size_t i = 0; i < sums.size(); ++i)
        sums[i] = (counts[i] > 0.0 ? sums[i] / counts[i] : 255.0) / 255.0 - 0.5;
    return sums;
}

LanguageProbe LanguageProbe::init(std::vector<int> languages, uint64_t seed) {
    LanguageProbe p;
    p.languages = std::move(languages);
    const int in = kInputSide * kInputSide;
    const int out = int(p.languages.size());
    Rng rng(mix_seed({seed, 0x9806Eu}));
    auto init_tensor = [&](int r, int c, double scale) {
        std::vector<double> vals(size_t(r) * c);
        for (double& v : vals) v = rng.normal() * scale;
        ag::Tensor t = ag::Tensor::from_data({r, c}, std::move(vals));
        t.set_requires_grad(true);
        return t;
    };
    p.w1 = init_tensor(in, kHidden, 0.02);
    p.b1 = ag::Tensor::zeros({kHidden});
    p.b1.set_requires_grad(true);
    p.w2 = init_tensor(kHidden, out, 0.02);
    p.b2 = ag::Tensor::zeros({out});
    p.b2.set_requires_grad(true);
    return p;
}

namespace {

ag::Tensor probe_logits(const LanguageProbe& p, const std::vector<double>& features) {
    ag::Tensor x = ag::Tensor::from_data({1, int(features.size())}, features);
    ag::Tensor h = ag::relu(ag::linear(x, p.w1, p.b1));
    ag::Tensor logits = ag::linear(h, p.w2, p.b2);
    return ag::reshape(logits, {int(p.languages.size())});
}

}  // namespace

int LanguageProbe::predict(const GrayImage& img) const {
    return ag::argmax(probe_logits(*this, probe_features(img)));
}

LanguageProbe train_language_probe(const Dataset& train, int epochs, uint64_t seed) {
    std::vector<int> langs = train.language_ids();
    if (langs.size() < 2)
        throw std::runtime_error("language probe needs at least two languages, got " +
                                 std::to_string(langs.size()));

    LanguageProbe probe = LanguageProbe::init(langs, seed);
    ag::Adam opt({probe.w1, probe.b1, probe.w2, probe.b2});

    // Features are fixed; precompute once.
    std::vector<std::vector<double>> feats;
    std::vector<int> targets;
    feats.reserve(train.documents.size());
    for (const Document& d : train.documents) {
        feats.push_back(probe_features(d.image));
        const auto it = std::lower_bound(langs.begin(), langs.end(), d.language_id);
        targets.push_back(int(it - langs.begin()));
    }

    const int n = int(feats.size());
    const int batch = 16;
    const double base_lr = 1e-3;
    const int64_t total_steps = int64_t((n + batch - 1) / batch) * epochs;
    int64_t step = 0;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < epochs; ++epoch) {
        Rng shuffle_rng(mix_seed({seed, 0x0E60Cu, uint64_t(epoch)}));
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.below(uint64_t(i + 1))]);
        for (int start = 0; start < n; start += batch) {
            const int end = std::min(n, start + batch);
            for (int i = start; i < end; ++i) {
                ag::Tensor loss = ag::cross_entropy(probe_logits(probe, feats[order[i]]),
                                                    targets[order[i]]);
                ag::backward(ag::scale(loss, 1.0 / double(end - start)));
            }
            // small L2 pull on the weights; 240-document training sets need it
            ag::backward(ag::scale(ag::sum(ag::mul(probe.w1, probe.w1)), 5e-5));
            ag::backward(ag::scale(ag::sum(ag::mul(probe.w2, probe.w2)), 5e-5));
            opt.step(ag::lr_at(step++, total_steps, base_lr));
        }
    }
    return probe;
}

double eval_language_probe(const LanguageProbe& probe, const Dataset& test) {
    if (test.documents.empty()) return 0.0;
    size_t correct = 0;
    for (const Document& d : test.documents) {
        const int cls = probe.predict(d.image);
        const auto it = std::lower_bound(probe.languages.begin(), probe.languages.end(),
                                         d.language_id);
        const int want = int(it - probe.languages.begin());
        correct += (cls == want && it != probe.languages.end() && *it == d.language_id);
    }
    return double(correct) / double(test.documents.size());
}

}  // namespace ldp
