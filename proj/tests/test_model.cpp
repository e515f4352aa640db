#include <doctest.h>

#include <cmath>
#include <cstring>

#include <array>
#include <set>

#include "fd_check.hpp"
#include "ldp/model.hpp"
#include "ldp/rng.hpp"
#include "ldp/synth.hpp"

using namespace ldp;
using ag::Tensor;

namespace {

ModelConfig miniature() {
    ModelConfig cfg;
    cfg.image_size = 32;
    cfg.patch_size = 8;
    cfg.dim = 8;
    cfg.enc_layers = 1;
    cfg.dec_layers = 1;
    cfg.tokens_per_box = 2;
    cfg.heads = 2;
    cfg.text_dim = 8;
    return cfg;
}

GrayImage random_image(int size, uint64_t seed) {
    GrayImage img(size, size);
    Rng rng(seed);
    for (auto& p : img.pixels) p = uint8_t(rng.below(256));
    return img;
}

Document toy_document(int size, uint64_t seed) {
    Document d;
    d.id = "toy";
    d.image = random_image(size, seed);
    d.entries.push_back({{2, 2, 14, 10}, "ab c", EntityLabel::Question, {}});
    d.entries.push_back({{2, 16, 20, 24}, "dd", EntityLabel::Answer, {}});
    return d;
}

bool bits_equal(const Tensor& a, const Tensor& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), size_t(a.size()) * sizeof(double)) == 0;
}

void zero_param(Model& m, const std::string& name) {
    Tensor& t = m.params.at(name);
    std::fill(t.data(), t.data() + t.size(), 0.0);
}

}  // namespace

TEST_CASE("encoder output shape and determinism") {
    const Model m = Model::init(ModelConfig{}, 1);
    const GrayImage img = random_image(128, 7);
    const Tensor f1 = m.encode_image(img);
    CHECK(f1.shape() == ag::Shape{256, 64});
    const Tensor f2 = m.encode_image(img);
    CHECK(bits_equal(f1, f2));

    GrayImage wrong(64, 64);
    CHECK_THROWS(m.encode_image(wrong));
}

TEST_CASE("whole-patch translation permutes patch tokens exactly") {
    const Model m = Model::init(ModelConfig{}, 3);
    GrayImage a(128, 128);
    // a glyph-sized blob inside patch (2,1)
    for (int y = 8; y < 15; ++y)
        for (int x = 16; x < 23; ++x) a.set(x, y, 0);
    GrayImage b(128, 128);
    for (int y = 8; y < 15; ++y)
        for (int x = 24; x < 31; ++x) b.set(x, y, 0);  // shifted one patch right

    const Tensor ta = m.patch_tokens(a);
    const Tensor tb = m.patch_tokens(b);
    const int d = 64;
    const int row_a = 1 * 16 + 2, row_b = 1 * 16 + 3;
    CHECK(std::memcmp(ta.data() + row_a * d, tb.data() + row_b * d,
                      sizeof(double) * d) == 0);
}

TEST_CASE("box prompt encoding") {
    Model m = Model::init(ModelConfig{}, 5);

    // identical boxes give identical tokens
    const BBox box{10, 20, 40, 30};
    CHECK(bits_equal(m.encode_box(box), m.encode_box(box)));

    // full-image corners encode coordinates 0 and 1 of the fixed code
    zero_param(m, "prompt.corner");
    const Tensor full = m.encode_box({0, 0, 128, 128});
    std::vector<double> want(64);
    auto fill = [&](double coord, double* out) {
        for (int i = 0; i < 16; ++i) {
            const double freq = 6.283185307179586 * std::pow(64.0, double(i) / 15.0);
            out[2 * i] = std::sin(coord * freq);
            out[2 * i + 1] = std::cos(coord * freq);
        }
    };
    fill(0.0, want.data());
    fill(0.0, want.data() + 32);
    for (int i = 0; i < 64; ++i) CHECK(full.data()[i] == doctest::Approx(want[i]));
    fill(1.0, want.data());
    fill(1.0, want.data() + 32);
    for (int i = 0; i < 64; ++i)
        CHECK(full.data()[64 + i] == doctest::Approx(want[i]).epsilon(1e-9));

    // no collisions over a random sample of distinct boxes
    Rng rng(11);
    std::set<std::array<int, 4>> seen;
    std::set<std::vector<double>> encodings;
    int added = 0;
    while (added < 1000) {
        const int x0 = int(rng.below(120)), y0 = int(rng.below(120));
        const BBox bb{x0, y0, x0 + 1 + int(rng.below(uint64_t(128 - x0 - 1))),
                      y0 + 1 + int(rng.below(uint64_t(128 - y0 - 1)))};
        if (!seen.insert({bb.x0, bb.y0, bb.x1, bb.y1}).second) continue;
        encodings.insert(m.encode_box(bb).values());
        ++added;
    }
    CHECK(encodings.size() == 1000);
}

TEST_CASE("decode rejects empty box lists and handles one box") {
    const Model m = Model::init(ModelConfig{}, 9);
    const GrayImage img = random_image(128, 13);
    const Tensor feats = m.encode_image(img);
    CHECK_THROWS(m.decode(feats, {}));

    const std::vector<BBox> one{{4, 4, 30, 12}};
    const DecoderState st = m.decode(feats, one);
    CHECK(st.final_merged.size() == 1);
    CHECK(st.final_merged[0].shape() == ag::Shape{1, 256});
    CHECK(int(st.merged_per_layer.size()) == m.cfg.dec_layers);
}

TEST_CASE("box permutation permutes outputs bit-exactly") {
    ModelConfig cfg;
    cfg.image_size = 64;
    const Model m = Model::init(cfg, 17);
    const GrayImage img = random_image(64, 19);
    const Tensor feats = m.encode_image(img);

    const std::vector<BBox> boxes{{4, 4, 20, 12}, {30, 4, 60, 12}, {4, 20, 40, 28}};
    const std::vector<BBox> perm{boxes[2], boxes[0], boxes[1]};
    const DecoderState a = m.decode(feats, boxes);
    const DecoderState b = m.decode(feats, perm);
    CHECK(bits_equal(a.final_merged[0], b.final_merged[1]));
    CHECK(bits_equal(a.final_merged[1], b.final_merged[2]));
    CHECK(bits_equal(a.final_merged[2], b.final_merged[0]));

    // end to end: permuted entries give permuted logits, bit-exact
    Document doc = toy_document(64, 23);
    Document rev = doc;
    std::swap(rev.entries[0], rev.entries[1]);
    const auto la = m.forward_logits(doc, false);
    const auto lb = m.forward_logits(rev, false);
    CHECK(bits_equal(la[0], lb[1]));
    CHECK(bits_equal(la[1], lb[0]));
}

TEST_CASE("equal boxes produce equal merged outputs") {
    const Model m = Model::init(ModelConfig{}, 21);
    const GrayImage img = random_image(128, 25);
    const Tensor feats = m.encode_image(img);
    const BBox bb{8, 8, 48, 16};
    const DecoderState st = m.decode(feats, std::vector<BBox>{bb, bb});
    CHECK(bits_equal(st.final_merged[0], st.final_merged[1]));
}

TEST_CASE("mtim zero-init interior is the identity on tokens") {
    ModelConfig cfg = miniature();
    Model m = Model::init(cfg, 27);
    Model off = m;
    off.cfg.mtim = false;

    for (int l = 0; l < cfg.dec_layers; ++l) {
        const std::string q = "mtim" + std::to_string(l);
        zero_param(m, q + ".attn.wo");
        zero_param(m, q + ".attn.bo");
        zero_param(m, q + ".mlp.w2");
        zero_param(m, q + ".mlp.b2");
    }
    const GrayImage img = random_image(cfg.image_size, 29);
    const Tensor feats = m.encode_image(img);
    const std::vector<BBox> boxes{{2, 2, 14, 10}, {2, 16, 20, 24}};
    const DecoderState with_zeroed = m.decode(feats, boxes);
    const DecoderState without = off.decode(off.encode_image(img), boxes);
    for (int i = 0; i < 2; ++i)
        CHECK(bits_equal(with_zeroed.final_merged[i], without.final_merged[i]));
}

TEST_CASE("merge and split back is an exact round trip") {
    Rng rng(31);
    std::vector<double> vals(4 * 8);
    for (double& v : vals) v = rng.next_double();
    Tensor x = Tensor::from_data({4, 8}, vals);
    Tensor merged = ag::reshape(x, {1, 32});
    Tensor back = ag::reshape(merged, {4, 8});
    CHECK(bits_equal(x, back));
}

TEST_CASE("mtim isolation: cross-box dependency only when enabled") {
    ModelConfig cfg = miniature();
    cfg.mtim = false;
    const Model off = Model::init(cfg, 33);
    const GrayImage img = random_image(cfg.image_size, 35);

    Document doc = toy_document(cfg.image_size, 35);
    Document edited = doc;
    edited.entries[1].box = {6, 18, 26, 26};  // move box 1

    const auto a = off.forward_logits(doc, false);
    const auto b = off.forward_logits(edited, false);
    CHECK(bits_equal(a[0], b[0]));  // box 0 untouched bit-for-bit

    cfg.mtim = true;
    const Model on = Model::init(cfg, 33);
    const auto c = on.forward_logits(doc, false);
    const auto d = on.forward_logits(edited, false);
    bool changed = false;
    for (int64_t i = 0; i < c[0].size(); ++i)
        if (c[0].data()[i] != d[0].data()[i]) changed = true;
    CHECK(changed);
}

TEST_CASE("text embedding is frozen, deterministic, and similarity-aware") {
    const auto a = embed_text("total amount", 64);
    const auto b = embed_text("total amount", 64);
    CHECK(a == b);

    const auto empty = embed_text("", 64);
    for (double v : empty) CHECK(v == 0.0);
    const auto one = embed_text("x", 64);  // too short for a bigram
    for (double v : one) CHECK(v == 0.0);

    auto cosine = [](const std::vector<double>& x, const std::vector<double>& y) {
        double num = 0, nx = 0, ny = 0;
        for (size_t i = 0; i < x.size(); ++i) {
            num += x[i] * y[i];
            nx += x[i] * x[i];
            ny += y[i] * y[i];
        }
        return num / std::sqrt(nx * ny);
    };
    const auto close = embed_text("total amounts", 64);
    const auto far = embed_text("zzqx", 64);
    CHECK(cosine(a, close) > cosine(a, far));
}

TEST_CASE("language fusion is neutral at initialization") {
    ModelConfig cfg = miniature();
    Model m = Model::init(cfg, 37);
    const Document doc = toy_document(cfg.image_size, 39);

    const auto before = m.forward_logits(doc, false);
    m.enable_lki(LkiPlacement::Both);
    const auto after = m.forward_logits(doc, true);
    for (size_t i = 0; i < before.size(); ++i) CHECK(bits_equal(before[i], after[i]));

    // empty text leaves the fused feature untouched for any weights
    Tensor& w = m.params.at("lki.cls.w");
    Rng rng(41);
    for (int64_t i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    Tensor f = Tensor::from_data({1, cfg.merged_dim()},
                                 std::vector<double>(size_t(cfg.merged_dim()), 0.25));
    CHECK(bits_equal(m.fuse_text(f, ""), f));
    CHECK(!bits_equal(m.fuse_text(f, "ab"), f));
}

TEST_CASE("classifier head shape, normalization, and tie-break") {
    ModelConfig cfg;
    Model m = Model::init(cfg, 43);
    zero_param(m, "head.w2");
    zero_param(m, "head.b2");
    Tensor f = Tensor::from_data({1, cfg.merged_dim()},
                                 std::vector<double>(size_t(cfg.merged_dim()), 0.3));
    const Tensor logits = m.classify(f);
    CHECK(logits.shape() == ag::Shape{4});
    for (int i = 0; i < 4; ++i) CHECK(logits.data()[i] == 0.0);  // uniform
    CHECK(ag::argmax(logits) == 0);

    Model m2 = Model::init(cfg, 44);
    const Tensor l2 = m2.classify(f);
    const Tensor sm = ag::softmax(l2);
    double total = 0;
    for (int i = 0; i < 4; ++i) total += sm.data()[i];
    CHECK(std::abs(total - 1.0) <= 1e-9);
}

TEST_CASE("full miniature model matches finite differences") {
    ModelConfig cfg = miniature();
    Model m = Model::init(cfg, 47);
    m.enable_lki(LkiPlacement::Both);
    // give the fusion weights some mass so their gradients are exercised
    Rng rng(49);
    for (const char* name : {"lki.cls.w", "lki.dec.w"}) {
        Tensor& t = m.params.at(name);
        for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = 0.1 * rng.normal();
    }

    const Document doc = toy_document(cfg.image_size, 51);
    auto forward = [&]() {
        const auto logits = m.forward_logits(doc, true);
        Tensor loss = ag::scale(
            ag::add(ag::cross_entropy(logits[0], 1), ag::cross_entropy(logits[1], 2)),
            0.5);
        return loss;
    };

    ag::backward(forward());
    std::vector<Tensor> inputs;
    std::vector<std::vector<double>> analytic;
    for (auto& [name, t] : m.params) {
        inputs.push_back(t);
        analytic.push_back(t.grad_values());
        t.zero_grad();
    }
    const double err = fd::max_rel_error(
        inputs, [&] { return forward().item(); }, analytic);
    CHECK(err <= 1e-4);
}
