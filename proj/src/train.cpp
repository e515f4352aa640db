#include "ldp/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ldp/optim.hpp"
#include "ldp/rng.hpp"

namespace ldp {

namespace {

int64_t planned_steps(const TrainConfig& cfg, size_t n_docs) {
    if (cfg.steps > 0) return cfg.steps;
    if (cfg.epochs > 0) {
        const int64_t per_epoch = int64_t((n_docs + cfg.batch - 1) / cfg.batch);
        return per_epoch * cfg.epochs;
    }
    throw std::runtime_error("training needs steps or epochs");
}

// Stateless schedule: document index for global position g. Epoch
// permutations are derived, not carried, so a resumed run replays the same
// stream.
struct BatchSchedule {
    uint64_t seed;
    size_t n;
    int64_t cached_epoch = -1;
    std::vector<int> perm;

    int doc_at(int64_t g) {
        const int64_t epoch = g / int64_t(n);
        if (epoch != cached_epoch) {
            perm.resize(n);
            for (size_t i = 0; i < n; ++i) perm[i] = int(i);
            Rng rng(mix_seed({seed, 0x5C4EDu, uint64_t(epoch)}));
            for (size_t i = n - 1; i > 0; --i)
                std::swap(perm[i], perm[rng.below(uint64_t(i + 1))]);
            cached_epoch = epoch;
        }
        return perm[size_t(g % int64_t(n))];
    }
};

ag::Tensor document_loss(const Model& model, const Document& doc, bool use_text,
                         int max_boxes) {
    const auto logits = model.forward_logits(doc, use_text, max_boxes);
    std::vector<ag::Tensor> losses;
    losses.reserve(logits.size());
    for (size_t i = 0; i < logits.size(); ++i)
        losses.push_back(ag::cross_entropy(logits[i], int(doc.entries[i].label)));
    return ag::scale(ag::sum(ag::concat(losses, 0)), 1.0 / double(losses.size()));
}

void train_loop(Model& model, ag::Adam& opt, const Dataset& data, const TrainConfig& cfg,
                int64_t total_steps, int64_t from_step, int64_t to_step, bool use_text,
                int max_boxes) {
    BatchSchedule schedule{cfg.seed, data.documents.size()};
    for (int64_t s = from_step; s < to_step; ++s) {
        for (int b = 0; b < cfg.batch; ++b) {
            const Document& doc =
                data.documents[size_t(schedule.doc_at(s * cfg.batch + b))];
            ag::backward(
                ag::scale(document_loss(model, doc, use_text, max_boxes),
                          1.0 / double(cfg.batch)));
        }
        opt.step(ag::lr_at(s, total_steps, cfg.base_lr));
    }
}

ag::Adam make_optimizer(Checkpoint& ckpt) {
    ag::Adam opt(ckpt.model.trainable());
    size_t i = 0;
    for (const auto& [name, t] : ckpt.model.params) {
        const auto m = ckpt.opt_m.find(name);
        const auto v = ckpt.opt_v.find(name);
        if (m != ckpt.opt_m.end()) opt.first_moment(i) = m->second;
        if (v != ckpt.opt_v.end()) opt.second_moment(i) = v->second;
        (void)t;
        ++i;
    }
    opt.set_steps_taken(ckpt.step);
    return opt;
}

void capture_optimizer(Checkpoint& ckpt, ag::Adam& opt) {
    ckpt.opt_m.clear();
    ckpt.opt_v.clear();
    size_t i = 0;
    for (const auto& [name, t] : ckpt.model.params) {
        (void)t;
        ckpt.opt_m[name] = opt.first_moment(i);
        ckpt.opt_v[name] = opt.second_moment(i);
        ++i;
    }
}

}  // namespace

Checkpoint pretrain(const Dataset& train, const TrainConfig& cfg) {
    if (train.documents.empty()) throw std::runtime_error("pretrain: empty dataset");
    if (!cfg.allow_raw) {
        for (const Document& d : train.documents) {
            if (!d.provenance.decoupled)
                throw std::runtime_error(
                    "pretrain: document '" + d.id +
                    "' has raw provenance; decouple the data first or pass the "
                    "raw-data override");
        }
    }
    Checkpoint ckpt;
    ckpt.cfg = cfg;
    ckpt.cfg.phase = Phase::Pretrain;
    ckpt.model = Model::init(cfg.model, cfg.seed);
    ckpt.total_steps = planned_steps(cfg, train.documents.size());

    ag::Adam opt(ckpt.model.trainable());
    const int64_t stop = cfg.stop_after > 0
                             ? std::min<int64_t>(cfg.stop_after, ckpt.total_steps)
                             : ckpt.total_steps;
    const int cap = cfg.box_truncation > 0 ? cfg.box_truncation : 0;
    train_loop(ckpt.model, opt, train, ckpt.cfg, ckpt.total_steps, 0, stop,
               /*use_text=*/false, cap);
    ckpt.step = stop;
    capture_optimizer(ckpt, opt);
    return ckpt;
}

Checkpoint finetune(const Checkpoint& start, const Dataset& train,
                    const TrainConfig& cfg) {
    if (train.documents.empty()) throw std::runtime_error("finetune: empty dataset");
    for (const Document& d : train.documents) {
        if (d.provenance.decoupled)
            throw std::runtime_error("finetune: document '" + d.id +
                                     "' is decoupled; fine-tuning keeps original images");
    }
    Checkpoint ckpt;
    ckpt.cfg = cfg;
    ckpt.cfg.phase = Phase::Finetune;
    ckpt.cfg.model = start.model.cfg;  // architecture travels with the weights
    ckpt.cfg.box_truncation = 0;       // all boxes are retained
    ckpt.model = start.model;
    ckpt.model.enable_lki(cfg.lki);
    ckpt.total_steps = planned_steps(ckpt.cfg, train.documents.size());

    ag::Adam opt(ckpt.model.trainable());
    const int64_t stop = cfg.stop_after > 0
                             ? std::min<int64_t>(cfg.stop_after, ckpt.total_steps)
                             : ckpt.total_steps;
    train_loop(ckpt.model, opt, train, ckpt.cfg, ckpt.total_steps, 0, stop,
               /*use_text=*/cfg.lki != LkiPlacement::None, 0);
    ckpt.step = stop;
    capture_optimizer(ckpt, opt);
    return ckpt;
}

Checkpoint resume_training(const Checkpoint& paused, const Dataset& train,
                           int stop_after) {
    Checkpoint ckpt = paused;
    const int64_t stop = stop_after > 0 ? std::min<int64_t>(stop_after, ckpt.total_steps)
                                        : ckpt.total_steps;
    if (ckpt.step >= stop) return ckpt;
    ag::Adam opt = make_optimizer(ckpt);
    const bool use_text =
        ckpt.cfg.phase == Phase::Finetune && ckpt.cfg.lki != LkiPlacement::None;
    const int cap = ckpt.cfg.phase == Phase::Pretrain && ckpt.cfg.box_truncation > 0
                        ? ckpt.cfg.box_truncation
                        : 0;
    train_loop(ckpt.model, opt, train, ckpt.cfg, ckpt.total_steps, ckpt.step, stop,
               use_text, cap);
    ckpt.step = stop;
    capture_optimizer(ckpt, opt);
    return ckpt;
}

MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& test,
                       std::vector<std::vector<EntityLabel>>* predictions) {
    if (test.documents.empty()) throw std::runtime_error("evaluate: empty dataset");
    const bool use_text = ckpt.model.lki != LkiPlacement::None;

    std::map<int, std::pair<std::vector<EntityLabel>, std::vector<EntityLabel>>> by_lang;
    std::vector<EntityLabel> all_preds, all_golds;
    if (predictions) predictions->clear();
    for (const Document& doc : test.documents) {
        const auto logits = ckpt.model.forward_logits(doc, use_text, 0);
        std::vector<EntityLabel> preds;
        preds.reserve(logits.size());
        for (size_t i = 0; i < logits.size(); ++i) {
            const EntityLabel pred = EntityLabel(ag::argmax(logits[i]));
            preds.push_back(pred);
            by_lang[doc.language_id].first.push_back(pred);
            by_lang[doc.language_id].second.push_back(doc.entries[i].label);
            all_preds.push_back(pred);
            all_golds.push_back(doc.entries[i].label);
        }
        if (predictions) predictions->push_back(std::move(preds));
    }

    MetricsReport report;
    for (const auto& [lang, pg] : by_lang) {
        const F1Scores s = entity_f1(pg.first, pg.second);
        MetricsRecord r;
        r.config_id = "lang=" + std::to_string(lang);
        r.precision = s.precision;
        r.recall = s.recall;
        r.f1 = s.f1;
        report.records.push_back(r);
    }
    const F1Scores pooled = entity_f1(all_preds, all_golds);
    MetricsRecord r;
    r.config_id = "all";
    r.precision = pooled.precision;
    r.recall = pooled.recall;
    r.f1 = pooled.f1;
    report.records.push_back(r);
    return report;
}

// ---- checkpoint serialization ----------------------------------------------

namespace {

constexpr char kMagic[4] = {'L', 'D', 'P', 'C'};

void put_u16(std::ostream& out, uint16_t v) { out.write(reinterpret_cast<char*>(&v), 2); }
void put_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); }
void put_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<char*>(&v), 8); }

uint16_t get_u16(std::istream& in) {
    uint16_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 2);
    return v;
}
uint32_t get_u32(std::istream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}
uint64_t get_u64(std::istream& in) {
    uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

struct NamedTensor {
    std::vector<int> shape;
    std::vector<double> values;
};

// Numeric provenance packed as a tensor; strings ride as one f64 per byte.
std::map<std::string, NamedTensor> flatten(const Checkpoint& ckpt) {
    std::map<std::string, NamedTensor> out;
    for (const auto& [name, t] : ckpt.model.params)
        out[name] = {t.shape(), t.values()};
    for (const auto& [name, v] : ckpt.opt_m)
        out["opt.m." + name] = {{int(v.size())}, v};
    for (const auto& [name, v] : ckpt.opt_v)
        out["opt.v." + name] = {{int(v.size())}, v};

    const TrainConfig& c = ckpt.cfg;
    const ModelConfig& mc = c.model;
    std::vector<double> meta{
        double(int(c.phase)),       double(int(c.lki)),
        mc.mtim ? 1.0 : 0.0,        double(ckpt.total_steps),
        double(c.batch),            c.base_lr,
        double(uint32_t(c.seed >> 32)), double(uint32_t(c.seed)),
        double(c.box_truncation),   double(ckpt.step),
        double(mc.image_size),      double(mc.patch_size),
        double(mc.dim),             double(mc.enc_layers),
        double(mc.dec_layers),      double(mc.tokens_per_box),
        double(mc.heads),           double(mc.classes),
        double(mc.text_dim),        double(mc.max_boxes_pretrain),
        double(int(ckpt.model.lki))};
    out["__meta"] = {{int(meta.size())}, meta};

    std::vector<double> path(c.data_path.size());
    for (size_t i = 0; i < path.size(); ++i)
        path[i] = double(uint8_t(c.data_path[i]));
    out["__meta.data"] = {{int(path.size())}, path};
    return out;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
    const auto tensors = flatten(ckpt);
    out.write(kMagic, 4);
    put_u32(out, Checkpoint::kVersion);
    put_u32(out, uint32_t(tensors.size()));
    for (const auto& [name, t] : tensors) {
        put_u16(out, uint16_t(name.size()));
        out.write(name.data(), std::streamsize(name.size()));
        const uint8_t rank = uint8_t(t.shape.size());
        out.write(reinterpret_cast<const char*>(&rank), 1);
        for (int d : t.shape) put_u64(out, uint64_t(d));
        out.write(reinterpret_cast<const char*>(t.values.data()),
                  std::streamsize(t.values.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad checkpoint magic in " + path.string());
    const uint32_t version = get_u32(in);
    if (version != Checkpoint::kVersion)
        throw std::runtime_error("unsupported checkpoint version " +
                                 std::to_string(version) + " in " + path.string());
    const uint32_t count = get_u32(in);

    std::map<std::string, NamedTensor> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t name_len = get_u16(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        uint8_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 1);
        if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
        NamedTensor t;
        int64_t total = 1;
        for (int r = 0; r < rank; ++r) {
            const uint64_t dim = get_u64(in);
            t.shape.push_back(int(dim));
            total *= int64_t(dim);
        }
        if (!in || total < 0 || total > (1ll << 32))
            throw std::runtime_error("corrupt checkpoint tensor header in " +
                                     path.string());
        t.values.resize(size_t(total));
        in.read(reinterpret_cast<char*>(t.values.data()),
                std::streamsize(t.values.size() * sizeof(double)));
        if (in.gcount() != std::streamsize(t.values.size() * sizeof(double)))
            throw std::runtime_error("truncated checkpoint payload in " + path.string());
        tensors[std::move(name)] = std::move(t);
    }

    const auto meta_it = tensors.find("__meta");
    if (meta_it == tensors.end() || meta_it->second.values.size() < 21)
        throw std::runtime_error("checkpoint missing provenance in " + path.string());
    const auto& meta = meta_it->second.values;

    Checkpoint ckpt;
    TrainConfig& c = ckpt.cfg;
    ModelConfig& mc = c.model;
    c.phase = Phase(int(meta[0]));
    c.lki = LkiPlacement(int(meta[1]));
    mc.mtim = meta[2] != 0.0;
    ckpt.total_steps = int64_t(meta[3]);
    c.batch = int(meta[4]);
    c.base_lr = meta[5];
    c.seed = (uint64_t(meta[6]) << 32) | uint64_t(meta[7]);
    c.box_truncation = int(meta[8]);
    ckpt.step = int64_t(meta[9]);
    mc.image_size = int(meta[10]);
    mc.patch_size = int(meta[11]);
    mc.dim = int(meta[12]);
    mc.enc_layers = int(meta[13]);
    mc.dec_layers = int(meta[14]);
    mc.tokens_per_box = int(meta[15]);
    mc.heads = int(meta[16]);
    mc.classes = int(meta[17]);
    mc.text_dim = int(meta[18]);
    mc.max_boxes_pretrain = int(meta[19]);
    c.steps = int(ckpt.total_steps);

    if (const auto it = tensors.find("__meta.data"); it != tensors.end()) {
        for (double b : it->second.values) c.data_path += char(uint8_t(b));
    }

    // Rebuild the model from the stored tensors; every architecture-implied
    // parameter must be present.
    Model reference = Model::init(mc, 0);
    reference.enable_lki(LkiPlacement(int(meta[20])));
    ckpt.model.cfg = mc;
    ckpt.model.lki = LkiPlacement(int(meta[20]));
    for (const auto& [name, t] : reference.params) {
        const auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("checkpoint missing tensor '" + name + "' in " +
                                     path.string());
        if (it->second.shape != t.shape())
            throw std::runtime_error("checkpoint tensor '" + name +
                                     "' has the wrong shape in " + path.string());
        ag::Tensor loaded =
            ag::Tensor::from_data(it->second.shape, it->second.values);
        loaded.set_requires_grad(true);
        ckpt.model.params[name] = loaded;
        if (const auto m = tensors.find("opt.m." + name); m != tensors.end())
            ckpt.opt_m[name] = m->second.values;
        if (const auto v = tensors.find("opt.v." + name); v != tensors.end())
            ckpt.opt_v[name] = v->second.values;
    }
    return ckpt;
}

}  // namespace ldp
