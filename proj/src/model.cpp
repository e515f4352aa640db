#include "ldp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ldp/rng.hpp"

namespace ldp {

using ag::Tensor;

std::string lki_name(LkiPlacement p) {
    switch (p) {
        case LkiPlacement::None: return "none";
        case LkiPlacement::Classifier: return "classifier";
        case LkiPlacement::Decoder: return "decoder";
        case LkiPlacement::Both: return "both";
    }
    return "none";
}

LkiPlacement lki_from_name(const std::string& s) {
    if (s == "none") return LkiPlacement::None;
    if (s == "classifier") return LkiPlacement::Classifier;
    if (s == "decoder") return LkiPlacement::Decoder;
    if (s == "both") return LkiPlacement::Both;
    throw std::runtime_error("unknown fusion placement: " + s);
}

std::vector<double> embed_text(const std::string& text, int dim) {
    std::vector<double> v(size_t(dim), 0.0);
    auto bump = [&](std::string_view gram) {
        v[hash_str(gram) % uint64_t(dim)] += 1.0;
    };
    for (size_t i = 0; i + 2 <= text.size(); ++i) bump({text.data() + i, 2});
    for (size_t i = 0; i + 3 <= text.size(); ++i) bump({text.data() + i, 3});
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = 1.0 / std::sqrt(norm);
        for (double& x : v) x *= norm;
    }
    return v;
}

namespace {

// Sinusoidal features of a scalar coordinate in [0, 1]: pairs of sin/cos at
// geometrically spaced frequencies, `dims` outputs total.
void sincos_features(double coord, int dims, double* out) {
    const int pairs = dims / 2;
    for (int i = 0; i < pairs; ++i) {
        const double freq =
            6.283185307179586 * std::pow(64.0, double(i) / double(std::max(1, pairs - 1)));
        out[2 * i] = std::sin(coord * freq);
        out[2 * i + 1] = std::cos(coord * freq);
    }
}

Tensor ln_affine(const Tensor& x, const Tensor& gain, const Tensor& bias) {
    return ag::add(ag::mul(ag::layer_norm(x), gain), bias);
}

}  // namespace

const Tensor& Model::param(const std::string& name) const {
    const auto it = params.find(name);
    if (it == params.end())
        throw std::runtime_error("model parameter '" + name + "' missing");
    return it->second;
}

Model Model::init(const ModelConfig& cfg, uint64_t seed) {
    if (cfg.dim % cfg.heads != 0)
        throw std::runtime_error("feature dim must divide into heads");
    if (cfg.dim % 4 != 0)
        throw std::runtime_error("feature dim must be a multiple of 4");
    if (cfg.image_size % cfg.patch_size != 0)
        throw std::runtime_error("image size must be a multiple of the patch size");
    if (cfg.tokens_per_box < 1) throw std::runtime_error("need at least one box token");

    Model m;
    m.cfg = cfg;
    Rng rng(mix_seed({seed, 0x30DE1u}));
    auto normal = [&](ag::Shape shape, double s) {
        int64_t n = 1;
        for (int d : shape) n *= d;
        std::vector<double> vals(size_t(n), 0.0);
        for (double& v : vals) v = rng.normal() * s;
        Tensor t = Tensor::from_data(std::move(shape), std::move(vals));
        t.set_requires_grad(true);
        return t;
    };
    auto zeros = [&](ag::Shape shape) {
        Tensor t = Tensor::zeros(std::move(shape));
        t.set_requires_grad(true);
        return t;
    };
    auto ones = [&](ag::Shape shape) {
        Tensor t = Tensor::full(std::move(shape), 1.0);
        t.set_requires_grad(true);
        return t;
    };
    const double s = 0.02;
    const int d = cfg.dim;
    const int hidden = cfg.mlp_hidden();
    const int M = cfg.merged_dim();

    auto attn_params = [&](const std::string& p, int width) {
        m.params[p + ".wq"] = normal({width, width}, s);
        m.params[p + ".wk"] = normal({width, width}, s);
        m.params[p + ".wv"] = normal({width, width}, s);
        m.params[p + ".wo"] = normal({width, width}, s);
        m.params[p + ".bq"] = zeros({width});
        m.params[p + ".bk"] = zeros({width});
        m.params[p + ".bv"] = zeros({width});
        m.params[p + ".bo"] = zeros({width});
    };
    auto mlp_params = [&](const std::string& p, int width, int hid) {
        m.params[p + ".w1"] = normal({width, hid}, s);
        m.params[p + ".b1"] = zeros({hid});
        m.params[p + ".w2"] = normal({hid, width}, s);
        m.params[p + ".b2"] = zeros({width});
    };
    auto ln_params = [&](const std::string& p, int width) {
        m.params[p + ".g"] = ones({width});
        m.params[p + ".b"] = zeros({width});
    };

    m.params["enc.patch.w"] = normal({cfg.patch_size * cfg.patch_size, d}, s);
    m.params["enc.patch.b"] = zeros({d});
    for (int i = 0; i < cfg.enc_layers; ++i) {
        const std::string p = "enc" + std::to_string(i);
        ln_params(p + ".ln1", d);
        attn_params(p + ".attn", d);
        ln_params(p + ".ln2", d);
        mlp_params(p + ".mlp", d, hidden);
    }
    ln_params("enc.lnf", d);

    m.params["prompt.corner"] = normal({2, d}, s);
    m.params["tokens.out"] = normal({cfg.tokens_per_box, d}, s);

    for (int i = 0; i < cfg.dec_layers; ++i) {
        const std::string p = "dec" + std::to_string(i);
        ln_params(p + ".ln1", d);
        attn_params(p + ".self", d);
        ln_params(p + ".ln2", d);
        attn_params(p + ".cross", d);
        ln_params(p + ".ln3", d);
        mlp_params(p + ".mlp", d, hidden);
        if (cfg.mtim) {
            const std::string q = "mtim" + std::to_string(i);
            ln_params(q + ".ln1", M);
            attn_params(q + ".attn", M);
            ln_params(q + ".ln2", M);
            mlp_params(q + ".mlp", M, 2 * M);
        }
    }

    m.params["head.w1"] = normal({M, hidden}, s);
    m.params["head.b1"] = zeros({hidden});
    m.params["head.w2"] = normal({hidden, cfg.classes}, s);
    m.params["head.b2"] = zeros({cfg.classes});
    return m;
}

void Model::enable_lki(LkiPlacement placement) {
    lki = placement;
    const bool cls = placement == LkiPlacement::Classifier || placement == LkiPlacement::Both;
    const bool dec = placement == LkiPlacement::Decoder || placement == LkiPlacement::Both;
    auto zeros = [&](ag::Shape shape) {
        Tensor t = Tensor::zeros(std::move(shape));
        t.set_requires_grad(true);
        return t;
    };
    if (cls && !params.count("lki.cls.w"))
        params["lki.cls.w"] = zeros({cfg.text_dim, cfg.merged_dim()});
    if (dec && !params.count("lki.dec.w"))
        params["lki.dec.w"] = zeros({cfg.text_dim, cfg.dim});
}

std::vector<Tensor> Model::trainable() const {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const auto& [name, t] : params) out.push_back(t);
    return out;
}

Tensor Model::patch_tokens(const GrayImage& img) const {
    if (img.width != cfg.image_size || img.height != cfg.image_size)
        throw std::runtime_error("image is " + std::to_string(img.width) + "x" +
                                 std::to_string(img.height) + ", model expects " +
                                 std::to_string(cfg.image_size));
    const int ps = cfg.patch_size;
    const int side = cfg.patches_per_side();
    std::vector<double> patches(size_t(cfg.num_patches()) * ps * ps);
    size_t row = 0;
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            for (int y = 0; y < ps; ++y)
                for (int x = 0; x < ps; ++x)
                    patches[row * ps * ps + size_t(y) * ps + x] =
                        double(img.at(px * ps + x, py * ps + y)) / 255.0 - 0.5;
            ++row;
        }
    }
    Tensor flat = Tensor::from_data({cfg.num_patches(), ps * ps}, std::move(patches));
    return ag::linear(flat, param("enc.patch.w"), param("enc.patch.b"));
}

Tensor Model::image_pos_encoding() const {
    const int side = cfg.patches_per_side();
    const int d = cfg.dim;
    std::vector<double> pos(size_t(cfg.num_patches()) * d);
    for (int py = 0; py < side; ++py) {
        for (int px = 0; px < side; ++px) {
            double* row = pos.data() + (size_t(py) * side + px) * d;
            sincos_features(double(py) / double(side), d / 2, row);
            sincos_features(double(px) / double(side), d / 2, row + d / 2);
        }
    }
    return Tensor::from_data({cfg.num_patches(), d}, std::move(pos));
}

namespace {

// Attention with the key/value projections supplied by the caller, so a
// shared key/value set (the image features) is projected once per layer.
Tensor attention_core(const Model& m, const std::string& prefix, const Tensor& q_in,
                      const Tensor& k, const Tensor& v, int heads) {
    const auto& P = m.params;
    const Tensor q = ag::linear(q_in, P.at(prefix + ".wq"), P.at(prefix + ".bq"));
    const auto qs = ag::split(q, heads, 1);
    const auto ks = ag::split(k, heads, 1);
    const auto vs = ag::split(v, heads, 1);
    const double scale = 1.0 / std::sqrt(double(q.cols() / heads));
    std::vector<Tensor> outs;
    outs.reserve(qs.size());
    for (int h = 0; h < heads; ++h) {
        Tensor scores = ag::scale(ag::matmul(qs[h], ag::transpose(ks[h])), scale);
        outs.push_back(ag::matmul(ag::softmax(scores), vs[h]));
    }
    return ag::linear(ag::concat(outs, 1), P.at(prefix + ".wo"), P.at(prefix + ".bo"));
}

std::pair<Tensor, Tensor> project_kv(const Model& m, const std::string& prefix,
                                     const Tensor& kv_in) {
    const auto& P = m.params;
    return {ag::linear(kv_in, P.at(prefix + ".wk"), P.at(prefix + ".bk")),
            ag::linear(kv_in, P.at(prefix + ".wv"), P.at(prefix + ".bv"))};
}

// Pre-norm multi-head self-attention.
Tensor multihead(const Model& m, const std::string& prefix, const Tensor& q_in,
                 const Tensor& kv_in, int heads) {
    const auto [k, v] = project_kv(m, prefix, kv_in);
    return attention_core(m, prefix, q_in, k, v, heads);
}

Tensor mlp_block(const Model& m, const std::string& prefix, const Tensor& x) {
    const auto& P = m.params;
    Tensor h = ag::relu(ag::linear(x, P.at(prefix + ".w1"), P.at(prefix + ".b1")));
    return ag::linear(h, P.at(prefix + ".w2"), P.at(prefix + ".b2"));
}

}  // namespace

Tensor Model::encode_image(const GrayImage& img) const {
    Tensor x = ag::add(patch_tokens(img), image_pos_encoding());
    for (int i = 0; i < cfg.enc_layers; ++i) {
        const std::string p = "enc" + std::to_string(i);
        Tensor n1 = ln_affine(x, param(p + ".ln1.g"), param(p + ".ln1.b"));
        x = ag::add(x, multihead(*this, p + ".attn", n1, n1, cfg.heads));
        Tensor n2 = ln_affine(x, param(p + ".ln2.g"), param(p + ".ln2.b"));
        x = ag::add(x, mlp_block(*this, p + ".mlp", n2));
    }
    return ln_affine(x, param("enc.lnf.g"), param("enc.lnf.b"));
}

Tensor Model::encode_box(const BBox& box) const {
    const int d = cfg.dim;
    std::vector<double> feats(size_t(2) * d);
    const double inv = 1.0 / double(cfg.image_size);
    sincos_features(double(box.x0) * inv, d / 2, feats.data());
    sincos_features(double(box.y0) * inv, d / 2, feats.data() + d / 2);
    sincos_features(double(box.x1) * inv, d / 2, feats.data() + d);
    sincos_features(double(box.y1) * inv, d / 2, feats.data() + d + d / 2);
    Tensor base = Tensor::from_data({2, d}, std::move(feats));
    return ag::add(base, param("prompt.corner"));
}

DecoderState Model::decode(const ag::Tensor& image_features, std::span<const BBox> boxes,
                           std::span<const std::string> texts) const {
    if (boxes.empty()) throw std::runtime_error("decode: no boxes");
    const int n = int(boxes.size());
    const int K = cfg.tokens_per_box;

    // Canonical geometric order for every cross-box operation: the outputs
    // are then bit-exact under any permutation of the input list.
    std::vector<int> canon(n);
    std::iota(canon.begin(), canon.end(), 0);
    std::sort(canon.begin(), canon.end(),
              [&](int a, int b) { return boxes[a] < boxes[b]; });

    std::vector<Tensor> tokens(n);  // (K+2) x d per box
    for (int i = 0; i < n; ++i) {
        tokens[i] = ag::concat({param("tokens.out"), encode_box(boxes[i])}, 0);
        if ((lki == LkiPlacement::Decoder || lki == LkiPlacement::Both) &&
            !texts.empty() && params.count("lki.dec.w")) {
            Tensor e = Tensor::from_data({1, cfg.text_dim},
                                         embed_text(texts[i], cfg.text_dim));
            Tensor proj = ag::matmul(e, params.at("lki.dec.w"));
            tokens[i] = ag::add(tokens[i], ag::reshape(proj, {cfg.dim}));
        }
    }

    DecoderState state;
    state.merged_per_layer.resize(cfg.dec_layers);
    for (int l = 0; l < cfg.dec_layers; ++l) {
        const std::string p = "dec" + std::to_string(l);
        // Image keys/values are identical for every box; project once.
        const auto [img_k, img_v] = project_kv(*this, p + ".cross", image_features);
        for (int i = 0; i < n; ++i) {
            Tensor& x = tokens[i];
            Tensor n1 = ln_affine(x, param(p + ".ln1.g"), param(p + ".ln1.b"));
            x = ag::add(x, multihead(*this, p + ".self", n1, n1, cfg.heads));
            Tensor n2 = ln_affine(x, param(p + ".ln2.g"), param(p + ".ln2.b"));
            x = ag::add(x, attention_core(*this, p + ".cross", n2, img_k, img_v,
                                          cfg.heads));
            Tensor n3 = ln_affine(x, param(p + ".ln3.g"), param(p + ".ln3.b"));
            x = ag::add(x, mlp_block(*this, p + ".mlp", n3));
        }

        // Merge each box's K output tokens into one vector.
        std::vector<Tensor> merged(n);
        for (int i = 0; i < n; ++i) {
            auto rows = ag::split(tokens[i], K + 2, 0);
            std::vector<Tensor> head_rows(rows.begin(), rows.begin() + K);
            merged[i] = ag::reshape(ag::concat(head_rows, 0), {1, cfg.merged_dim()});
        }

        if (cfg.mtim) {
            const std::string q = "mtim" + std::to_string(l);
            std::vector<Tensor> ordered(n);
            for (int i = 0; i < n; ++i) ordered[i] = merged[canon[i]];
            Tensor m = ag::concat(ordered, 0);
            Tensor n1 = ln_affine(m, param(q + ".ln1.g"), param(q + ".ln1.b"));
            m = ag::add(m, multihead(*this, q + ".attn", n1, n1, cfg.heads));
            Tensor n2 = ln_affine(m, param(q + ".ln2.g"), param(q + ".ln2.b"));
            m = ag::add(m, mlp_block(*this, q + ".mlp", n2));
            const auto rows = ag::split(m, n, 0);
            for (int i = 0; i < n; ++i) merged[canon[i]] = rows[i];

            // Resize back: the updated merged vector replaces the box's K
            // tokens; the two prompt tokens pass through.
            for (int i = 0; i < n; ++i) {
                auto rows_i = ag::split(tokens[i], K + 2, 0);
                std::vector<Tensor> parts;
                parts.push_back(ag::reshape(merged[i], {K, cfg.dim}));
                parts.push_back(rows_i[K]);
                parts.push_back(rows_i[K + 1]);
                tokens[i] = ag::concat(parts, 0);
            }
        }
        state.merged_per_layer[l] = merged;
    }
    state.final_merged = state.merged_per_layer.back();
    return state;
}

Tensor Model::fuse_text(const ag::Tensor& final_merged, const std::string& text) const {
    if (!params.count("lki.cls.w")) return final_merged;
    Tensor e = Tensor::from_data({1, cfg.text_dim}, embed_text(text, cfg.text_dim));
    return ag::add(final_merged, ag::matmul(e, params.at("lki.cls.w")));
}

Tensor Model::classify(const ag::Tensor& merged) const {
    Tensor h = ag::relu(ag::linear(merged, param("head.w1"), param("head.b1")));
    Tensor logits = ag::linear(h, param("head.w2"), param("head.b2"));
    return ag::reshape(logits, {cfg.classes});
}

std::vector<Tensor> Model::forward_logits(const Document& doc, bool use_text,
                                          int max_boxes) const {
    const int limit = max_boxes > 0 ? std::min<int>(max_boxes, int(doc.entries.size()))
                                    : int(doc.entries.size());
    std::vector<BBox> boxes;
    std::vector<std::string> texts;
    boxes.reserve(limit);
    for (int i = 0; i < limit; ++i) {
        boxes.push_back(doc.entries[i].box);
        if (use_text) texts.push_back(doc.entries[i].text);
    }
    Tensor features = encode_image(doc.image);
    DecoderState st =
        decode(features, boxes,
               use_text ? std::span<const std::string>(texts) : std::span<const std::string>());

    const bool fuse = use_text && (lki == LkiPlacement::Classifier || lki == LkiPlacement::Both);
    std::vector<Tensor> logits;
    logits.reserve(boxes.size());
    for (size_t i = 0; i < boxes.size(); ++i) {
        Tensor f = st.final_merged[i];
        if (fuse) f = fuse_text(f, doc.entries[i].text);
        logits.push_back(classify(f));
    }
    return logits;
}

}  // namespace ldp
