// Command-line front end: corpus generation, decoupling, training,
// evaluation, the bias probe, and experiment scenarios.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "ldp/decouple.hpp"
#include "ldp/experiment.hpp"
#include "ldp/kernels.hpp"
#include "ldp/probe.hpp"
#include "ldp/rng.hpp"
#include "ldp/train.hpp"

using namespace ldp;
namespace fs = std::filesystem;

namespace {

std::vector<uint64_t> parse_seeds(const std::string& csv) {
    std::vector<uint64_t> seeds;
    std::string cur;
    for (char c : csv + ",") {
        if (c == ',') {
            if (!cur.empty()) seeds.push_back(std::stoull(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return seeds;
}

void print_report(const MetricsReport& report) {
    std::fputs(report.to_csv().c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"language-decoupled pretraining laboratory"};
    app.require_subcommand(1);
    app.set_config("--config", "", "text config file (key=value)");

    uint64_t seed = 1;
    std::string out;
    int threads = 1;
    app.add_option("--seed", seed, "master seed")->capture_default_str();
    app.add_option("--threads", threads, "worker threads for experiment cells")
        ->capture_default_str();
    std::string backend = "auto";
    app.add_option("--kernels", backend, "vector backend: auto|scalar|avx2")
        ->check(CLI::IsMember({"auto", "scalar", "avx2"}))
        ->capture_default_str();

    // ---- gen-corpus ----
    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic corpus");
    CorpusConfig corpus_cfg;
    int gen_language = -1;
    int gen_count = 0;
    gen->add_option("--out", out, "output directory")->required();
    gen->add_option("--languages", corpus_cfg.num_languages)->capture_default_str();
    gen->add_option("--docs-per-language", corpus_cfg.docs_per_language)
        ->capture_default_str();
    gen->add_option("--image-size", corpus_cfg.image_size)->capture_default_str();
    gen->add_option("--label-noise", corpus_cfg.label_noise_rate)->capture_default_str();
    gen->add_option("--language", gen_language,
                    "emit a single language as one train split");
    gen->add_option("--count", gen_count, "document count for --language mode");

    // ---- decouple ----
    auto* dec = app.add_subcommand("decouple", "remove language bias from a dataset");
    std::string dec_in, dec_mode = "hybrid";
    int dec_resolution = 64;
    dec->add_option("--in", dec_in, "input dataset directory")->required();
    dec->add_option("--out", out, "output dataset directory")->required();
    dec->add_option("--mode", dec_mode, "resample|substitute|hybrid")
        ->check(CLI::IsMember({"resample", "substitute", "hybrid"}))
        ->capture_default_str();
    dec->add_option("--resolution", dec_resolution, "decouple resolution R")
        ->capture_default_str();

    // ---- pretrain / finetune ----
    TrainConfig tc;
    auto* pre = app.add_subcommand("pretrain", "pretrain on a decoupled dataset");
    std::string data_dir, ckpt_in;
    bool no_mtim = false;
    pre->add_option("--data", data_dir, "training dataset directory")->required();
    pre->add_option("--out", out, "checkpoint path")->required();
    pre->add_option("--steps", tc.steps, "optimizer steps");
    int pre_epochs = 5;
    pre->add_option("--epochs", pre_epochs)->capture_default_str();
    pre->add_option("--batch", tc.batch)->capture_default_str();
    pre->add_option("--lr", tc.base_lr)->capture_default_str();
    pre->add_option("--truncate-boxes", tc.box_truncation)->capture_default_str();
    pre->add_flag("--no-mtim", no_mtim, "disable cross-box token merging");
    pre->add_flag("--allow-raw", tc.allow_raw, "permit raw-provenance data");
    pre->add_option("--stop-after", tc.stop_after, "pause after this step");

    auto* fin = app.add_subcommand("finetune", "fine-tune from a checkpoint");
    std::string lki_placement = "classifier";
    bool do_resume = false;
    int fin_steps = 2000;
    fin->add_option("--ckpt", ckpt_in, "starting checkpoint")->required();
    fin->add_option("--data", data_dir, "training dataset directory")->required();
    fin->add_option("--out", out, "checkpoint path")->required();
    fin->add_option("--steps", fin_steps)->capture_default_str();
    fin->add_option("--batch", tc.batch)->capture_default_str();
    fin->add_option("--lr", tc.base_lr)->capture_default_str();
    fin->add_option("--lki", lki_placement, "none|classifier|decoder|both")
        ->check(CLI::IsMember({"none", "classifier", "decoder", "both"}))
        ->capture_default_str();
    fin->add_option("--stop-after", tc.stop_after, "pause after this step");
    fin->add_flag("--resume", do_resume, "continue a paused fine-tune run");

    // ---- eval ----
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--ckpt", ckpt_in, "checkpoint path")->required();
    ev->add_option("--data", data_dir, "evaluation dataset directory")->required();
    ev->add_option("--out", out, "report path prefix (.csv/.json)");

    // ---- probe ----
    auto* pr = app.add_subcommand("probe", "train and score the language bias probe");
    std::string probe_train, probe_test;
    int probe_epochs = 80;
    pr->add_option("--train", probe_train, "training dataset directory")->required();
    pr->add_option("--test", probe_test, "test dataset directory")->required();
    pr->add_option("--epochs", probe_epochs)->capture_default_str();
    pr->add_option("--out", out, "report path prefix (.csv/.json)");

    // ---- experiment ----
    auto* ex = app.add_subcommand("experiment", "run a scenario over seeds");
    ExperimentSpec spec;
    std::string scenario = "decouple_sweep", seeds_csv = "1,2,3";
    ex->add_option("--scenario", scenario,
                   "decouple_sweep|zero_shot_matrix|ablation_grid")
        ->check(CLI::IsMember({"decouple_sweep", "zero_shot_matrix", "ablation_grid"}))
        ->capture_default_str();
    ex->add_option("--out", out, "output directory")->required();
    ex->add_option("--seeds", seeds_csv, "comma separated seeds")->capture_default_str();
    ex->add_option("--corpus-seed", spec.corpus_seed)->capture_default_str();
    ex->add_option("--languages", spec.languages)->capture_default_str();
    ex->add_option("--pretrain-docs", spec.pretrain_docs)->capture_default_str();
    ex->add_option("--finetune-docs", spec.finetune_docs)->capture_default_str();
    ex->add_option("--test-docs", spec.test_docs_per_language)->capture_default_str();
    ex->add_option("--pretrain-epochs", spec.pretrain_epochs)->capture_default_str();
    ex->add_option("--finetune-steps", spec.finetune_steps)->capture_default_str();
    ex->add_option("--batch", spec.batch)->capture_default_str();
    ex->add_option("--probe-epochs", spec.probe_epochs)->capture_default_str();
    ex->add_option("--decouple-resolution", spec.decouple_resolution)
        ->capture_default_str();
    ex->add_option("--label-noise", spec.label_noise_rate)->capture_default_str();

    // ---- report ----
    auto* rep = app.add_subcommand("report", "aggregate experiment cell results");
    std::string report_in;
    rep->add_option("--in", report_in, "experiment output directory")->required();
    rep->add_option("--out", out, "summary csv path");

    CLI11_PARSE(app, argc, argv);

    kern::set_backend(backend == "scalar" ? kern::Backend::Scalar
                      : backend == "avx2" ? kern::Backend::Avx2
                                          : kern::Backend::Auto);

    try {
        if (*gen) {
            if (gen_language >= 0) {
                CorpusConfig cfg = corpus_cfg;
                const PseudoLanguage lang = make_language(seed, gen_language);
                Dataset ds;
                const int count = gen_count > 0 ? gen_count : cfg.docs_per_language;
                for (int i = 0; i < count; ++i) {
                    Document d = generate_document(
                        lang, mix_seed({seed, 0xD0C0u, uint64_t(gen_language), uint64_t(i)}),
                        cfg);
                    d.id = "l" + std::to_string(gen_language) + "-d" + std::to_string(i);
                    ds.documents.push_back(std::move(d));
                }
                save_dataset(ds, out);
                std::printf("wrote %zu documents to %s\n", ds.documents.size(), out.c_str());
            } else {
                const CorpusSplits splits = generate_corpus(seed, corpus_cfg);
                save_dataset(splits.train, fs::path(out) / "train");
                save_dataset(splits.test, fs::path(out) / "test");
                std::printf("wrote %zu train / %zu test documents to %s\n",
                            splits.train.documents.size(), splits.test.documents.size(),
                            out.c_str());
            }
        } else if (*dec) {
            const Dataset in = load_dataset(dec_in);
            DecoupleConfig cfg;
            cfg.mode = decouple_mode_from_name(dec_mode);
            cfg.resolution = dec_resolution;
            cfg.seed = seed;
            const PseudoLanguage fictional = make_language(seed, kFictionalLanguageId);
            save_dataset(decouple_dataset(in, cfg, fictional), out);
            std::printf("decoupled %zu documents (mode %s, R=%d) into %s\n",
                        in.documents.size(), dec_mode.c_str(), dec_resolution, out.c_str());
        } else if (*pre) {
            tc.phase = Phase::Pretrain;
            tc.seed = seed;
            tc.data_path = data_dir;
            tc.model.mtim = !no_mtim;
            if (tc.steps <= 0) tc.epochs = pre_epochs;
            const Checkpoint ckpt = pretrain(load_dataset(data_dir), tc);
            save_checkpoint(ckpt, out);
            std::printf("pretrained %lld steps -> %s\n",
                        (long long)ckpt.step, out.c_str());
        } else if (*fin) {
            tc.phase = Phase::Finetune;
            tc.seed = seed;
            tc.data_path = data_dir;
            tc.steps = fin_steps;
            tc.lki = lki_from_name(lki_placement);
            const Checkpoint start = load_checkpoint(ckpt_in);
            const Dataset data = load_dataset(data_dir);
            const Checkpoint ckpt = do_resume ? resume_training(start, data, tc.stop_after)
                                              : finetune(start, data, tc);
            save_checkpoint(ckpt, out);
            std::printf("fine-tuned to step %lld -> %s\n",
                        (long long)ckpt.step, out.c_str());
        } else if (*ev) {
            const MetricsReport report =
                evaluate(load_checkpoint(ckpt_in), load_dataset(data_dir));
            print_report(report);
            if (!out.empty()) {
                report.write_csv(out + ".csv");
                report.write_json(out + ".json");
            }
        } else if (*pr) {
            const Dataset train = load_dataset(probe_train);
            const Dataset test = load_dataset(probe_test);
            const LanguageProbe probe = train_language_probe(train, probe_epochs, seed);
            const double acc = eval_language_probe(probe, test);
            MetricsReport report;
            MetricsRecord r;
            r.config_id = "probe";
            r.probe_accuracy = acc;
            report.records.push_back(r);
            std::printf("probe accuracy: %.4f (%zu languages)\n", acc,
                        train.language_ids().size());
            if (!out.empty()) {
                report.write_csv(out + ".csv");
                report.write_json(out + ".json");
            }
        } else if (*ex) {
            spec.scenario = scenario_from_name(scenario);
            spec.out_dir = out;
            spec.seeds = parse_seeds(seeds_csv);
            spec.threads = threads;
            const MetricsReport report = run_experiment(spec);
            print_report(summarize(report));
            std::printf("kernel backend: %s\n", std::string(kern::backend_name()).c_str());
        } else if (*rep) {
            MetricsReport merged;
            for (const auto& entry : fs::directory_iterator(report_in)) {
                const std::string name = entry.path().filename().string();
                if (name.rfind("cell-", 0) != 0 || entry.path().extension() != ".csv")
                    continue;
                const MetricsReport part = read_metrics_csv(entry.path());
                merged.records.insert(merged.records.end(), part.records.begin(),
                                      part.records.end());
            }
            std::sort(merged.records.begin(), merged.records.end(),
                      [](const MetricsRecord& a, const MetricsRecord& b) {
                          return a.config_id < b.config_id;
                      });
            const MetricsReport means = summarize(merged);
            print_report(means);
            if (!out.empty()) means.write_csv(out);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
