#include <doctest.h>

#include <algorithm>

#include "ldp/decouple.hpp"
#include "ldp/metrics.hpp"
#include "ldp/rng.hpp"

using namespace ldp;

TEST_CASE("resample at the native resolution is the identity") {
    GrayImage img(16, 12);
    Rng rng(1);
    for (auto& p : img.pixels) p = uint8_t(rng.below(256));
    CHECK(resample_through(img, 16) == img);
}

TEST_CASE("resample preserves constant images") {
    for (int r : {1, 2, 5, 9}) {
        GrayImage img(10, 10, 137);
        const GrayImage out = resample_through(img, r);
        CHECK(out.width == 10);
        CHECK(out.height == 10);
        for (uint8_t p : out.pixels) CHECK(p == 137);
    }
}

TEST_CASE("2x2 checkerboard through R=1 becomes the rounded mean") {
    GrayImage img(2, 2);
    img.set(0, 0, 0);
    img.set(1, 0, 255);
    img.set(0, 1, 255);
    img.set(1, 1, 0);
    const GrayImage out = resample_through(img, 1);
    for (uint8_t p : out.pixels) CHECK(p == 128);  // bilinear mean 127.5, half-up
}

TEST_CASE("resample keeps dimensions for non-square images") {
    GrayImage img(24, 10);
    const GrayImage out = resample_through(img, 6);
    CHECK(out.width == 24);
    CHECK(out.height == 10);
}

namespace {

CorpusSplits small_corpus(uint64_t seed, int langs = 2, int dpl = 10) {
    CorpusConfig cfg;
    cfg.num_languages = langs;
    cfg.docs_per_language = dpl;
    return generate_corpus(seed, cfg);
}

}  // namespace

TEST_CASE("substitution: empty-entry doc unchanged, band background preserved") {
    const PseudoLanguage fictional = make_language(7, kFictionalLanguageId);

    Document empty;
    empty.id = "e";
    empty.image = GrayImage(16, 16, 255);
    const GrayImage out = substitute_glyphs(empty, fictional, 5);
    CHECK(out == empty.image);

    const auto splits = small_corpus(7);
    const Document& doc = splits.train.documents[0];
    const GrayImage sub = substitute_glyphs(doc, fictional, 5);
    CHECK(sub.width == doc.image.width);

    // non-ink pixels inside header cells keep the band intensity
    for (const Entry& e : doc.entries) {
        if (e.label != EntityLabel::Header) continue;
        for (const GlyphCell& c : e.cells)
            for (int y = c.box.y0; y < c.box.y1; ++y)
                for (int x = c.box.x0; x < c.box.x1; ++x)
                    if (sub.at(x, y) >= 128) CHECK(sub.at(x, y) == 200);
    }

    // pixels outside glyph cells are byte-identical
    for (int y = 0; y < doc.image.height; ++y) {
        for (int x = 0; x < doc.image.width; ++x) {
            bool in_cell = false;
            for (const Entry& e : doc.entries)
                for (const GlyphCell& c : e.cells)
                    if (x >= c.box.x0 && x < c.box.x1 && y >= c.box.y0 && y < c.box.y1)
                        in_cell = true;
            if (!in_cell) CHECK(sub.at(x, y) == doc.image.at(x, y));
        }
    }
}

TEST_CASE("substitution drops the OCR recognition ratio") {
    const auto splits = small_corpus(19, 2, 25);
    const PseudoLanguage fictional = make_language(19, kFictionalLanguageId);
    std::vector<PseudoLanguage> inventories{make_language(19, 0), make_language(19, 1)};

    Dataset raw = splits.train;
    DecoupleConfig cfg;
    cfg.mode = DecoupleMode::Substitute;
    cfg.resolution = 128;
    cfg.seed = 3;
    const Dataset sub = decouple_dataset(raw, cfg, fictional);

    const double raw_ratio = mean_recognition_ratio(raw, inventories);
    const double sub_ratio = mean_recognition_ratio(sub, inventories);
    CHECK(raw_ratio > 0.99);
    CHECK(sub_ratio < raw_ratio - 0.1);
}

TEST_CASE("decouple_document modes and metadata") {
    const auto splits = small_corpus(23);
    const Document& doc = splits.train.documents[1];
    const PseudoLanguage fictional = make_language(23, kFictionalLanguageId);

    DecoupleConfig cfg;
    cfg.mode = DecoupleMode::Resample;
    cfg.resolution = 128;
    const Document same = decouple_document(doc, cfg, fictional);
    CHECK(same.image == doc.image);  // R == full size is the identity
    CHECK(same.provenance.decoupled);
    CHECK(same.provenance.decouple_resolution == 128);
    CHECK(same.entries == doc.entries);  // annotations untouched
    CHECK(same.language_id == doc.language_id);

    cfg.mode = DecoupleMode::Hybrid;
    cfg.resolution = 32;
    cfg.seed = 9;
    const Document a = decouple_document(doc, cfg, fictional);
    const Document b = decouple_document(doc, cfg, fictional);
    CHECK(a == b);  // determinism
    CHECK(a.image.width == doc.image.width);
    CHECK(a.image.height == doc.image.height);

    cfg.resolution = 4000;
    CHECK_THROWS(decouple_document(doc, cfg, fictional));
    cfg.resolution = 0;
    CHECK_THROWS(decouple_document(doc, cfg, fictional));
}

TEST_CASE("hybrid ratio is higher at half resolution than quarter") {
    CorpusConfig ccfg;
    ccfg.num_languages = 2;
    ccfg.docs_per_language = 50;
    const auto splits = generate_corpus(29, ccfg);
    const PseudoLanguage fictional = make_language(29, kFictionalLanguageId);
    std::vector<PseudoLanguage> inventories{make_language(29, 0), make_language(29, 1)};

    DecoupleConfig cfg;
    cfg.mode = DecoupleMode::Hybrid;
    cfg.seed = 70;
    cfg.resolution = 64;
    const double half = mean_recognition_ratio(
        decouple_dataset(splits.train, cfg, fictional), inventories);
    cfg.resolution = 32;
    const double quarter = mean_recognition_ratio(
        decouple_dataset(splits.train, cfg, fictional), inventories);
    CHECK(half > quarter);
}

TEST_CASE("dataset decoupling is order independent") {
    const auto splits = small_corpus(37);
    const PseudoLanguage fictional = make_language(37, kFictionalLanguageId);
    DecoupleConfig cfg;
    cfg.mode = DecoupleMode::Hybrid;
    cfg.resolution = 48;
    cfg.seed = 11;

    Dataset shuffled = splits.train;
    std::reverse(shuffled.documents.begin(), shuffled.documents.end());

    const Dataset a = decouple_dataset(splits.train, cfg, fictional);
    const Dataset b = decouple_dataset(shuffled, cfg, fictional);
    REQUIRE(a.documents.size() == b.documents.size());
    for (const Document& d : a.documents) {
        const auto it = std::find_if(b.documents.begin(), b.documents.end(),
                                     [&](const Document& o) { return o.id == d.id; });
        REQUIRE(it != b.documents.end());
        CHECK(*it == d);
    }

    // empty dataset, count preservation
    CHECK(decouple_dataset(Dataset{}, cfg, fictional).documents.empty());
    CHECK(a.documents.size() == splits.train.documents.size());
}
