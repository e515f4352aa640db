#include "ldp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ldp/decouple.hpp"
#include "ldp/probe.hpp"
#include "ldp/rng.hpp"
#include "ldp/train.hpp"

namespace ldp {

namespace fs = std::filesystem;

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::DecoupleSweep: return "decouple_sweep";
        case Scenario::ZeroShotMatrix: return "zero_shot_matrix";
        case Scenario::AblationGrid: return "ablation_grid";
    }
    return "decouple_sweep";
}

Scenario scenario_from_name(const std::string& s) {
    if (s == "decouple_sweep") return Scenario::DecoupleSweep;
    if (s == "zero_shot_matrix") return Scenario::ZeroShotMatrix;
    if (s == "ablation_grid") return Scenario::AblationGrid;
    throw std::runtime_error("unknown scenario: " + s);
}

namespace {

Dataset monolingual_corpus(const PseudoLanguage& lang, int count, const std::string& tag,
                           uint64_t corpus_seed, const CorpusConfig& cfg) {
    Dataset ds;
    ds.split = Split::Train;
    for (int i = 0; i < count; ++i) {
        const uint64_t doc_seed = mix_seed(
            {corpus_seed, hash_str(tag), uint64_t(lang.language_id), uint64_t(i)});
        Document d = generate_document(lang, doc_seed, cfg);
        d.id = tag + "-l" + std::to_string(lang.language_id) + "-d" + std::to_string(i);
        ds.documents.push_back(std::move(d));
    }
    return ds;
}

// Shared inputs for the training scenarios, generated once per run.
struct TrainingData {
    Dataset pretrain_raw;
    Dataset pretrain_decoupled;
    Dataset finetune;
    std::vector<Dataset> test_by_language;  // indexed by language id
};

TrainingData build_training_data(const ExperimentSpec& spec) {
    CorpusConfig cfg;
    cfg.num_languages = spec.languages;
    cfg.label_noise_rate = spec.label_noise_rate;
    std::vector<PseudoLanguage> langs;
    for (int k = 0; k < spec.languages; ++k)
        langs.push_back(make_language(spec.corpus_seed, k));
    const PseudoLanguage fictional =
        make_language(spec.corpus_seed, kFictionalLanguageId);

    TrainingData data;
    data.pretrain_raw = monolingual_corpus(langs[spec.source_language],
                                           spec.pretrain_docs, "pre", spec.corpus_seed, cfg);
    DecoupleConfig dc;
    dc.mode = DecoupleMode::Hybrid;
    dc.resolution = spec.decouple_resolution;
    dc.seed = mix_seed({spec.corpus_seed, 0xDECu});
    data.pretrain_decoupled = decouple_dataset(data.pretrain_raw, dc, fictional);

    CorpusConfig clean = cfg;
    clean.label_noise_rate = 0.0;  // fine-tune and test sets carry gold labels
    data.finetune = monolingual_corpus(langs[spec.source_language], spec.finetune_docs,
                                       "ft", spec.corpus_seed, clean);
    data.test_by_language.resize(spec.languages);
    for (int k = 0; k < spec.languages; ++k) {
        data.test_by_language[k] = monolingual_corpus(langs[k], spec.test_docs_per_language,
                                                      "te", spec.corpus_seed, clean);
        data.test_by_language[k].split = Split::Test;
    }
    return data;
}

double f1_of(const MetricsReport& report, const std::string& config_id) {
    for (const MetricsRecord& r : report.records)
        if (r.config_id == config_id) return r.f1;
    return std::nan("");
}

// ---- per-cell artifact cache ------------------------------------------------

struct CellStore {
    fs::path dir;

    fs::path cell_path(const std::string& id) const {
        std::string file = id;
        std::replace(file.begin(), file.end(), '/', '_');
        return dir / ("cell-" + file + ".csv");
    }

    bool load(const std::string& id, MetricsReport& out) const {
        if (!fs::exists(cell_path(id))) return false;
        const MetricsReport part = read_metrics_csv(cell_path(id));
        out.records.insert(out.records.end(), part.records.begin(), part.records.end());
        return true;
    }

    void store(const std::string& id, const MetricsReport& rows) const {
        MetricsReport report;
        report.records = rows.records;
        report.write_csv(cell_path(id));
    }
};

// Pretraining checkpoints are shared between cells and scenarios through the
// filesystem. A per-key lock keeps two cells from computing the same
// checkpoint at once.
class CheckpointCache {
public:
    explicit CheckpointCache(fs::path dir) : dir_(std::move(dir)) {}

    template <typename Make>
    Checkpoint get(const std::string& key, Make make) {
        std::shared_ptr<std::mutex> key_mu;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto& slot = locks_[key];
            if (!slot) slot = std::make_shared<std::mutex>();
            key_mu = slot;
        }
        std::lock_guard<std::mutex> key_lock(*key_mu);
        const fs::path path = dir_ / (key + ".ldpc");
        if (fs::exists(path)) return load_checkpoint(path);
        Checkpoint ckpt = make();
        save_checkpoint(ckpt, path);
        return ckpt;
    }

private:
    fs::path dir_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

// ---- scenarios ---------------------------------------------------------------

struct CellResult {
    std::string id;
    MetricsReport rows;
};

MetricsReport sweep_cell(const ExperimentSpec& spec, const std::string& config,
                         int resolution, uint64_t seed) {
    CorpusConfig cfg;
    cfg.num_languages = spec.languages;
    cfg.label_noise_rate = spec.label_noise_rate;
    const CorpusSplits splits = generate_corpus(spec.corpus_seed, cfg);

    std::vector<PseudoLanguage> inventories;
    for (int k = 0; k < spec.languages; ++k)
        inventories.push_back(make_language(spec.corpus_seed, k));

    Dataset train = splits.train, test = splits.test;
    if (config != "raw") {
        const PseudoLanguage fictional =
            make_language(spec.corpus_seed, kFictionalLanguageId);
        DecoupleConfig dc;
        dc.mode = DecoupleMode::Hybrid;
        dc.resolution = resolution;
        dc.seed = mix_seed({spec.corpus_seed, 0x5EEDu});
        train = decouple_dataset(train, dc, fictional);
        test = decouple_dataset(test, dc, fictional);
    }

    Dataset all = train;
    for (const Document& d : test.documents) all.documents.push_back(d);

    const LanguageProbe probe = train_language_probe(train, spec.probe_epochs, seed);
    MetricsRecord r;
    r.config_id = "sweep/" + config + "/s" + std::to_string(seed);
    r.recognition_ratio = mean_recognition_ratio(all, inventories);
    r.probe_accuracy = eval_language_probe(probe, test);
    MetricsReport out;
    out.records.push_back(r);
    return out;
}

MetricsReport training_cell(const ExperimentSpec& spec, const TrainingData& data,
                            CheckpointCache& ckpts, const std::string& scenario,
                            const std::string& variant, bool mtim, LkiPlacement lki,
                            uint64_t seed) {
    const std::string cell_id = scenario + "/" + variant + "/mtim=" +
                                (mtim ? "on" : "off") + "/lki=" + lki_name(lki) + "/s" +
                                std::to_string(seed);

    Checkpoint start;
    if (variant == "none") {
        ModelConfig mc;
        mc.mtim = mtim;
        start.model = Model::init(mc, seed);
        start.cfg.model = mc;
    } else {
        const std::string key = "pre-" + variant + "-mtim" + (mtim ? "1" : "0") + "-s" +
                                std::to_string(seed);
        start = ckpts.get(key, [&] {
            TrainConfig pc;
            pc.phase = Phase::Pretrain;
            pc.epochs = spec.pretrain_epochs;
            pc.batch = spec.batch;
            pc.base_lr = spec.base_lr;
            pc.seed = seed;
            pc.model.mtim = mtim;
            pc.allow_raw = variant == "raw";
            pc.data_path = "corpus:" + variant;
            return pretrain(variant == "raw" ? data.pretrain_raw : data.pretrain_decoupled,
                            pc);
        });
    }

    const std::string ft_key = "ft-" + variant + "-mtim" + (mtim ? "1" : "0") + "-lki_" +
                               lki_name(lki) + "-s" + std::to_string(seed);
    Checkpoint tuned = ckpts.get(ft_key, [&] {
        TrainConfig tc;
        tc.phase = Phase::Finetune;
        tc.steps = spec.finetune_steps;
        tc.batch = spec.batch;
        tc.base_lr = spec.base_lr;
        tc.seed = seed;
        tc.lki = lki;
        tc.data_path = "corpus:finetune";
        return finetune(start, data.finetune, tc);
    });

    MetricsReport out;
    double zero_shot_sum = 0.0;
    int zero_shot_count = 0;
    for (int k = 0; k < spec.languages; ++k) {
        const MetricsReport rep = evaluate(tuned, data.test_by_language[k]);
        const double f1 = f1_of(rep, "all");
        MetricsRecord r;
        r.config_id = cell_id + "/lang=" + std::to_string(k);
        r.f1 = f1;
        for (const MetricsRecord& lr : rep.records) {
            if (lr.config_id == "all") {
                r.precision = lr.precision;
                r.recall = lr.recall;
            }
        }
        out.records.push_back(r);
        if (std::find(spec.target_languages.begin(), spec.target_languages.end(), k) !=
            spec.target_languages.end()) {
            zero_shot_sum += f1;
            ++zero_shot_count;
        }
    }
    MetricsRecord zs;
    zs.config_id = cell_id + "/zeroshot_avg";
    zs.f1 = zero_shot_count ? zero_shot_sum / zero_shot_count : std::nan("");
    out.records.push_back(zs);
    return out;
}

}  // namespace

MetricsReport summarize(const MetricsReport& cells) {
    // Strip the "/s<seed>" component and average every numeric column.
    struct Acc {
        double ratio = 0, probe = 0, precision = 0, recall = 0, f1 = 0;
        int n_ratio = 0, n_probe = 0, n_precision = 0, n_recall = 0, n_f1 = 0;
    };
    std::map<std::string, Acc> groups;
    for (const MetricsRecord& r : cells.records) {
        std::string key = r.config_id;
        const size_t pos = key.find("/s");
        if (pos != std::string::npos) {
            size_t end = key.find('/', pos + 1);
            bool numeric = true;
            const std::string seed_part =
                key.substr(pos + 2, (end == std::string::npos ? key.size() : end) - pos - 2);
            if (seed_part.empty()) numeric = false;
            for (char c : seed_part)
                if (!isdigit(uint8_t(c))) numeric = false;
            if (numeric)
                key = key.substr(0, pos) + "/mean" +
                      (end == std::string::npos ? "" : key.substr(end));
        }
        Acc& a = groups[key];
        auto fold = [](double v, double& sum, int& n) {
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        };
        fold(r.recognition_ratio, a.ratio, a.n_ratio);
        fold(r.probe_accuracy, a.probe, a.n_probe);
        fold(r.precision, a.precision, a.n_precision);
        fold(r.recall, a.recall, a.n_recall);
        fold(r.f1, a.f1, a.n_f1);
    }
    MetricsReport out;
    for (const auto& [key, a] : groups) {
        MetricsRecord r;
        r.config_id = key;
        if (a.n_ratio) r.recognition_ratio = a.ratio / a.n_ratio;
        if (a.n_probe) r.probe_accuracy = a.probe / a.n_probe;
        if (a.n_precision) r.precision = a.precision / a.n_precision;
        if (a.n_recall) r.recall = a.recall / a.n_recall;
        if (a.n_f1) r.f1 = a.f1 / a.n_f1;
        out.records.push_back(std::move(r));
    }
    return out;
}

MetricsReport run_experiment(const ExperimentSpec& spec) {
    if (spec.seeds.empty()) throw std::runtime_error("experiment needs at least one seed");
    fs::create_directories(spec.out_dir);
    fs::create_directories(spec.out_dir / "ckpt");
    CellStore cells{spec.out_dir};
    CheckpointCache ckpts(spec.out_dir / "ckpt");

    // Cell list per scenario. Each entry computes a MetricsReport.
    std::vector<std::pair<std::string, std::function<MetricsReport()>>> work;

    if (spec.scenario == Scenario::DecoupleSweep) {
        for (const uint64_t seed : spec.seeds) {
            work.emplace_back("sweep/raw/s" + std::to_string(seed),
                              [&spec, seed] { return sweep_cell(spec, "raw", 0, seed); });
            for (const int r : spec.r_grid) {
                work.emplace_back(
                    "sweep/R=" + std::to_string(r) + "/s" + std::to_string(seed),
                    [&spec, r, seed] {
                        return sweep_cell(spec, "R=" + std::to_string(r), r, seed);
                    });
            }
        }
    } else {
        auto data = std::make_shared<TrainingData>(build_training_data(spec));
        if (spec.scenario == Scenario::ZeroShotMatrix) {
            for (const uint64_t seed : spec.seeds) {
                for (const std::string variant : {"decoupled", "raw", "none"}) {
                    work.emplace_back(
                        "zero_shot/" + variant + "/mtim=on/lki=classifier/s" +
                            std::to_string(seed),
                        [&spec, &ckpts, data, variant, seed] {
                            return training_cell(spec, *data, ckpts, "zero_shot", variant,
                                                 true, LkiPlacement::Classifier, seed);
                        });
                }
            }
        } else {
            for (const uint64_t seed : spec.seeds) {
                const std::vector<std::pair<bool, LkiPlacement>> grid = {
                    {true, LkiPlacement::Classifier},
                    {false, LkiPlacement::Classifier},
                    {true, LkiPlacement::None},
                };
                for (const auto& [mtim, lki] : grid) {
                    work.emplace_back(
                        "ablation/decoupled/mtim=" + std::string(mtim ? "on" : "off") +
                            "/lki=" + lki_name(lki) + "/s" + std::to_string(seed),
                        [&spec, &ckpts, data, mtim, lki, seed] {
                            return training_cell(spec, *data, ckpts, "ablation",
                                                 "decoupled", mtim, lki, seed);
                        });
                }
            }
        }
    }

    // Pre-stage pretraining checkpoints serially when running parallel cells
    // would otherwise race on shared keys.
    std::vector<MetricsReport> results(work.size());
    std::atomic<size_t> next{0};
    std::mutex io_mu;
    auto worker = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= work.size()) return;
            MetricsReport cached;
            bool have = false;
            {
                std::lock_guard<std::mutex> lock(io_mu);
                have = cells.load(work[i].first, cached);
            }
            MetricsReport rep = have ? cached : work[i].second();
            if (!have) {
                std::lock_guard<std::mutex> lock(io_mu);
                cells.store(work[i].first, rep);
            }
            results[i] = std::move(rep);
        }
    };
    const int threads = std::max(1, spec.threads);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    MetricsReport merged;
    for (const MetricsReport& r : results)
        merged.records.insert(merged.records.end(), r.records.begin(), r.records.end());
    std::sort(merged.records.begin(), merged.records.end(),
              [](const MetricsRecord& a, const MetricsRecord& b) {
                  return a.config_id < b.config_id;
              });

    const MetricsReport means = summarize(merged);
    MetricsReport all = merged;
    all.records.insert(all.records.end(), means.records.begin(), means.records.end());

    all.write_csv(spec.out_dir / (scenario_name(spec.scenario) + ".csv"));
    all.write_json(spec.out_dir / (scenario_name(spec.scenario) + ".json"));
    return all;
}

}  // namespace ldp
