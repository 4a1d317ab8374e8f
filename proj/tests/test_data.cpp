#include <doctest.h>

#include <sstream>

#include "crowdlabel/data.hpp"
#include "crowdlabel/errors.hpp"

using namespace crowdlabel;

namespace {

AnnotationTensor parse(const std::string& text, std::optional<Dims> dims = std::nullopt) {
    std::istringstream in(text);
    return load_annotations(in, dims);
}

}  // namespace

TEST_CASE("three well-formed rows") {
    const auto t = parse("recording,annotator,species,label\n0,0,0,1\n1,1,2,0\n0,1,1,1\n", Dims{2, 2, 3});
    CHECK(t.size() == 3);
    CHECK(t.missing_rate() == doctest::Approx(1.0 - 3.0 / 12.0));
    const auto votes = t.votes(0, 1);
    REQUIRE(votes.size() == 1);
    CHECK(votes[0].annotator == 1);
    CHECK(votes[0].label == 1);
    CHECK(t.votes(1, 0).empty());
}

TEST_CASE("dimensions are inferred from the largest indices") {
    const auto t = parse("recording,annotator,species,label\n4,2,7,1\n");
    CHECK(t.dims() == Dims{5, 3, 8});
}

TEST_CASE("malformed annotation input") {
    CHECK_THROWS_AS(parse("recording,annotator,species,label\n0,0,0,1\n0,0,0,0\n"), DataError);
    CHECK_THROWS_AS(parse("recording,annotator,species,label\n0,0,0,2\n"), DataError);
    CHECK_THROWS_AS(parse("recording,annotator,species,label\n0,0,0\n"), DataError);
    CHECK_THROWS_AS(parse("recording,annotator,species,label\n-1,0,0,1\n"), DataError);
    CHECK_THROWS_AS(parse("rec,ann,sp,lab\n0,0,0,1\n"), DataError);
    CHECK_THROWS_AS(parse("recording,annotator,species,label\n3,0,0,1\n", Dims{2, 1, 1}), DataError);
    CHECK_THROWS_AS(AnnotationTensor(Dims{1, 1, 1}, {{0, 0, 1, 1}}), DataError);
}

TEST_CASE("both adjacency indexes agree with the entries") {
    const auto t = parse(
        "recording,annotator,species,label\n2,1,0,1\n0,0,1,0\n0,1,1,1\n1,0,0,1\n2,0,1,0\n");
    std::size_t by_cell = 0;
    for (std::size_t i = 0; i < t.n_recordings(); ++i) {
        for (std::size_t k = 0; k < t.n_species(); ++k) {
            std::uint32_t prev = 0;
            bool first = true;
            for (const auto& v : t.votes(i, k)) {
                CHECK(v.recording == i);
                CHECK(v.species == k);
                if (!first) CHECK(v.annotator > prev);
                prev = v.annotator;
                first = false;
                ++by_cell;
            }
        }
    }
    CHECK(by_cell == t.size());
    std::size_t by_annotator = 0;
    for (std::size_t j = 0; j < t.n_annotators(); ++j) {
        for (const auto& c : t.cells_of(j)) {
            const auto& e = t.entries()[c.entry];
            CHECK(e.annotator == j);
            CHECK(e.recording == c.recording);
            CHECK(e.species == c.species);
            CHECK(e.label == c.label);
            ++by_annotator;
        }
    }
    CHECK(by_annotator == t.size());
}

TEST_CASE("summaries") {
    SUBCASE("empty tensor") {
        const AnnotationTensor t(Dims{3, 2, 4}, {});
        const auto s = summarize(t);
        CHECK(s.missing_rate == 1.0);
        CHECK(s.observed_cells == 0);
        for (auto c : s.annotations_per_annotator) CHECK(c == 0);
        CHECK(s.mean_recordings_per_annotator == 0.0);
    }
    SUBCASE("one annotator labeling every cell") {
        std::vector<Annotation> entries;
        for (std::uint32_t i = 0; i < 4; ++i) {
            for (std::uint32_t k = 0; k < 3; ++k) entries.push_back({i, 0, k, static_cast<std::uint8_t>(k == 1)});
        }
        const AnnotationTensor t(Dims{4, 2, 3}, entries);
        const auto s = summarize(t);
        CHECK(s.annotations_per_annotator[0] == 12);
        CHECK(s.annotations_per_annotator[1] == 0);
        CHECK(s.recordings_per_annotator[0] == 4);
        CHECK(s.mean_recordings_per_annotator == doctest::Approx(2.0));
        CHECK(s.positives_per_species[1] == 4);
        CHECK(s.missing_rate == doctest::Approx(0.5));
    }
}

TEST_CASE("expertise sets") {
    const auto t = parse("recording,annotator,species,label\n0,0,0,1\n0,0,2,0\n1,1,1,1\n", Dims{2, 2, 3});
    SUBCASE("no file means every species") {
        const auto sets = load_expertise(nullptr, t);
        CHECK(sets.total_memberships() == 6);
        CHECK(sets.species_of(1).size() == 3);
    }
    SUBCASE("declared sets") {
        std::istringstream in("annotator,species\n0,0\n0,2\n1,1\n");
        const auto sets = load_expertise(&in, t);
        CHECK(sets.contains(0, 2));
        CHECK_FALSE(sets.contains(0, 1));
        CHECK(sets.species_of(0) == std::vector<std::uint32_t>{0, 2});
        std::ostringstream out;
        write_expertise(out, sets);
        CHECK(out.str() == "annotator,species\n0,0\n0,2\n1,1\n");
    }
    SUBCASE("annotation outside the declared set") {
        std::istringstream in("annotator,species\n0,0\n0,1\n1,1\n");
        CHECK_THROWS_AS(load_expertise(&in, t), DataError);
    }
    SUBCASE("index outside the tensor") {
        std::istringstream in("annotator,species\n0,0\n0,2\n1,1\n5,0\n");
        CHECK_THROWS_AS(load_expertise(&in, t), DataError);
    }
}

TEST_CASE("gold standard") {
    const Dims dims{3, 1, 2};
    std::istringstream in("recording,species,label\n2,1,1\n0,0,0\n");
    const auto gold = load_gold_standard(in, dims);
    REQUIRE(gold.labels.size() == 2);
    CHECK(gold.labels[0].recording == 0);
    CHECK(gold.labels[1].label == 1);
    std::ostringstream out;
    write_gold_standard(out, gold);
    CHECK(out.str() == "recording,species,label\n0,0,0\n2,1,1\n");
    std::istringstream dup("recording,species,label\n0,0,0\n0,0,1\n");
    CHECK_THROWS_AS(load_gold_standard(dup, dims), DataError);
    std::istringstream range("recording,species,label\n3,0,0\n");
    CHECK_THROWS_AS(load_gold_standard(range, dims), DataError);
}

TEST_CASE("annotation files round-trip") {
    const auto t = parse("recording,annotator,species,label\n1,0,1,1\n0,1,0,0\n");
    std::ostringstream out;
    write_annotations(out, t);
    const auto back = parse(out.str(), t.dims());
    CHECK(std::equal(t.entries().begin(), t.entries().end(), back.entries().begin(), back.entries().end()));
}

TEST_CASE("import with external identifiers") {
    std::istringstream in(
        "recording,annotator,species,label\n"
        "rec_b,alice,parus,1\n"
        "rec_a,bob,NA,1\n"
        "rec_a,alice,turdus,0\n"
        "rec_b,bob,parus,1\n");
    IdMap ids;
    const auto t = import_annotations(in, ids);
    CHECK(t.size() == 3);
    CHECK(t.dims() == Dims{2, 2, 2});
    CHECK(*ids.find(IdMap::Kind::Recording, "rec_a") == 0);
    CHECK(*ids.find(IdMap::Kind::Species, "turdus") == 1);
    CHECK_FALSE(ids.find(IdMap::Kind::Species, "NA").has_value());

    std::ostringstream out;
    ids.write(out);
    std::istringstream back(out.str());
    const auto again = IdMap::read(back);
    CHECK(again.ids(IdMap::Kind::Annotator) == ids.ids(IdMap::Kind::Annotator));

    std::istringstream dup("recording,annotator,species,label\nr,a,s,1\nr,a,s,0\n");
    IdMap other;
    CHECK_THROWS_AS(import_annotations(dup, other), DataError);
}
