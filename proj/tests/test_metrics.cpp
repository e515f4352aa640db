#include <doctest.h>

#include <string>
#include <vector>

#include "ldp/decouple.hpp"
#include "ldp/metrics.hpp"
#include "ldp/probe.hpp"
#include "ldp/rng.hpp"

using namespace ldp;

namespace {

// Independent oracle: full DP table, written against the recurrence rather
// than the two-row production code.
int edit_distance_table(const std::string& a, const std::string& b) {
    const size_t n = a.size(), m = b.size();
    std::vector<std::vector<int>> dp(n + 1, std::vector<int>(m + 1, 0));
    for (size_t i = 0; i <= n; ++i) dp[i][0] = int(i);
    for (size_t j = 0; j <= m; ++j) dp[0][j] = int(j);
    for (size_t i = 1; i <= n; ++i) {
        for (size_t j = 1; j <= m; ++j) {
            const int del = dp[i - 1][j] + 1;
            const int ins = dp[i][j - 1] + 1;
            const int sub = dp[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            dp[i][j] = std::min(std::min(del, ins), sub);
        }
    }
    return dp[n][m];
}

std::string random_string(Rng& rng, size_t max_len) {
    std::string s;
    const size_t len = rng.below(max_len + 1);
    for (size_t i = 0; i < len; ++i) s += char('a' + rng.below(6));
    return s;
}

}  // namespace

TEST_CASE("edit distance examples and oracle agreement") {
    CHECK(edit_distance("", "") == 0);
    CHECK(edit_distance("abc", "abc") == 0);
    CHECK(edit_distance("kitten", "sitting") == 3);

    Rng rng(123);
    for (int i = 0; i < 500; ++i) {
        const std::string a = random_string(rng, 12);
        const std::string b = random_string(rng, 12);
        CHECK(edit_distance(a, b) == edit_distance_table(a, b));
    }
}

TEST_CASE("edit distance triangle inequality") {
    Rng rng(321);
    for (int i = 0; i < 300; ++i) {
        const std::string a = random_string(rng, 10);
        const std::string b = random_string(rng, 10);
        const std::string c = random_string(rng, 10);
        CHECK(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
    }
}

TEST_CASE("recognition ratio formula") {
    CHECK(recognition_ratio("abc", "abc") == 1.0);
    CHECK(recognition_ratio("", "") == 1.0);
    CHECK(recognition_ratio("", "ab") == 0.0);  // 1 - 2/(0+2)
    CHECK(recognition_ratio("abc", "abd") == doctest::Approx(1.0 - 1.0 / 6.0).epsilon(1e-15));

    Rng rng(55);
    for (int i = 0; i < 500; ++i) {
        const std::string a = random_string(rng, 14);
        const std::string b = random_string(rng, 14);
        const double r = recognition_ratio(a, b);
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
        CHECK(r == recognition_ratio(b, a));  // symmetric
    }
}

TEST_CASE("entity f1 worked example and conventions") {
    using L = EntityLabel;
    const std::vector<L> golds{L::Question, L::Answer, L::Other, L::Header};
    const std::vector<L> preds{L::Question, L::Other, L::Answer, L::Header};
    const F1Scores s = entity_f1(preds, golds);
    CHECK(s.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(s.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    // perfect prediction
    const F1Scores perfect = entity_f1(golds, golds);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.recall == 1.0);
    CHECK(perfect.f1 == 1.0);

    // all-OTHER on both sides: 0/0 convention
    const std::vector<L> others(4, L::Other);
    const F1Scores vac = entity_f1(others, others);
    CHECK(vac.precision == 1.0);
    CHECK(vac.recall == 1.0);
    CHECK(vac.f1 == 1.0);

    CHECK_THROWS(entity_f1({L::Other}, {L::Other, L::Other}));
}

TEST_CASE("entity f1 equals brute force counting on random vectors") {
    Rng rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const size_t n = rng.below(30);
        std::vector<EntityLabel> preds, golds;
        for (size_t i = 0; i < n; ++i) {
            preds.push_back(EntityLabel(rng.below(4)));
            golds.push_back(EntityLabel(rng.below(4)));
        }
        // brute force, written straight from the definition
        int tp = 0, ppos = 0, gpos = 0;
        for (size_t i = 0; i < n; ++i) {
            if (preds[i] != EntityLabel::Other) ++ppos;
            if (golds[i] != EntityLabel::Other) ++gpos;
            if (preds[i] != EntityLabel::Other && golds[i] != EntityLabel::Other &&
                preds[i] == golds[i])
                ++tp;
        }
        double p, r, f;
        if (ppos == 0)
            p = (gpos == 0) ? 1.0 : 0.0;
        else
            p = double(tp) / ppos;
        if (gpos == 0)
            r = (ppos == 0) ? 1.0 : 0.0;
        else
            r = double(tp) / gpos;
        if (p + r == 0.0)
            f = (ppos == 0 && gpos == 0) ? 1.0 : 0.0;
        else
            f = 2.0 * p * r / (p + r);

        const F1Scores s = entity_f1(preds, golds);
        CHECK(s.precision == p);
        CHECK(s.recall == r);
        CHECK(s.f1 == f);

        // invariance under a joint permutation
        std::vector<size_t> perm(n);
        for (size_t i = 0; i < n; ++i) perm[i] = i;
        for (size_t i = n; i > 1; --i)
            std::swap(perm[i - 1], perm[rng.below(i)]);
        std::vector<EntityLabel> preds2(n), golds2(n);
        for (size_t i = 0; i < n; ++i) {
            preds2[i] = preds[perm[i]];
            golds2[i] = golds[perm[i]];
        }
        const F1Scores s2 = entity_f1(preds2, golds2);
        CHECK(s2.f1 == s.f1);
        CHECK(s2.precision == s.precision);
        CHECK(s2.recall == s.recall);
    }
}

TEST_CASE("ocr oracle is exact on raw renders with the matching inventory") {
    CorpusConfig cfg;
    cfg.num_languages = 2;
    cfg.docs_per_language = 6;
    const auto splits = generate_corpus(101, cfg);
    for (const Document& doc : splits.train.documents) {
        const auto inv = make_language(101, doc.language_id);
        const auto preds = ocr_recognize(doc, {inv});
        REQUIRE(preds.size() == doc.entries.size());
        for (size_t i = 0; i < preds.size(); ++i) {
            std::string gt;
            for (char c : doc.entries[i].text)
                if (c != ' ') gt += c;
            CHECK(recognition_ratio(preds[i], gt) == 1.0);
        }
    }
}

TEST_CASE("blank image resolves to the tie-break glyph") {
    CorpusConfig cfg;
    cfg.num_languages = 2;
    cfg.docs_per_language = 2;
    const auto splits = generate_corpus(103, cfg);
    Document doc = splits.train.documents[0];
    std::fill(doc.image.pixels.begin(), doc.image.pixels.end(), uint8_t(255));
    const auto preds = ocr_recognize(doc, {make_language(103, 0), make_language(103, 1)});
    for (const std::string& p : preds)
        for (char c : p) CHECK(c == glyph_char(0));
}

TEST_CASE("language probe separates raw languages and degrades when decoupled") {
    CorpusConfig cfg;
    cfg.num_languages = 3;
    cfg.docs_per_language = 30;
    const auto splits = generate_corpus(107, cfg);

    const LanguageProbe probe = train_language_probe(splits.train, 40, 1);
    const double raw_acc = eval_language_probe(probe, splits.test);
    CHECK(raw_acc >= 0.8);

    const PseudoLanguage fictional = make_language(107, kFictionalLanguageId);
    DecoupleConfig dcfg;
    dcfg.mode = DecoupleMode::Hybrid;
    dcfg.resolution = 32;
    dcfg.seed = 5;
    const Dataset dec_train = decouple_dataset(splits.train, dcfg, fictional);
    const Dataset dec_test = decouple_dataset(splits.test, dcfg, fictional);
    const LanguageProbe dprobe = train_language_probe(dec_train, 40, 1);
    const double dec_acc = eval_language_probe(dprobe, dec_test);
    CHECK(dec_acc < raw_acc);
    CHECK(dec_acc <= 0.6);  // near the 1/3 chance floor for three languages

    // single-language training set is rejected
    Dataset single;
    single.documents.push_back(splits.train.documents[0]);
    CHECK_THROWS(train_language_probe(single, 1, 1));
}

TEST_CASE("zero probe predicts the tie-break class") {
    CorpusConfig cfg;
    cfg.num_languages = 2;
    cfg.docs_per_language = 4;
    const auto splits = generate_corpus(109, cfg);
    LanguageProbe probe = LanguageProbe::init({0, 1}, 3);
    for (auto* t : {&probe.w1, &probe.b1, &probe.w2, &probe.b2})
        std::fill(t->data(), t->data() + t->size(), 0.0);
    size_t class0 = 0;
    for (const Document& d : splits.test.documents) class0 += d.language_id == 0;
    const double acc = eval_language_probe(probe, splits.test);
    CHECK(acc == doctest::Approx(double(class0) / splits.test.documents.size()));
}

TEST_CASE("metrics report serializes to csv and json") {
    MetricsReport report;
    MetricsRecord r;
    r.config_id = "cfg/a";
    r.recognition_ratio = 0.5;
    report.records.push_back(r);
    const std::string csv = report.to_csv();
    CHECK(csv.find("config_id,recognition_ratio,probe_accuracy,precision,recall,f1") !=
          std::string::npos);
    CHECK(csv.find("cfg/a,0.5,,,,") != std::string::npos);
    const std::string js = report.to_json();
    CHECK(js.find("\"probe_accuracy\": null") != std::string::npos);
}
