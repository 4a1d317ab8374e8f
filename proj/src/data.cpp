#include "crowdlabel/data.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "crowdlabel/errors.hpp"
#include "csv.hpp"

namespace crowdlabel {

// ---------------------------------------------------------------------------
// AnnotationTensor

AnnotationTensor::AnnotationTensor(Dims dims, std::vector<Annotation> entries)
    : dims_(dims), entries_(std::move(entries)) {
    for (const auto& e : entries_) {
        if (e.recording >= dims_.recordings || e.annotator >= dims_.annotators ||
            e.species >= dims_.species) {
            throw DataError("annotation (" + std::to_string(e.recording) + "," +
                            std::to_string(e.annotator) + "," + std::to_string(e.species) +
                            ") outside tensor dimensions");
        }
        if (e.label > 1) throw DataError("annotation label must be 0 or 1");
    }
    std::sort(entries_.begin(), entries_.end(), [](const Annotation& a, const Annotation& b) {
        return std::tie(a.recording, a.species, a.annotator) <
               std::tie(b.recording, b.species, b.annotator);
    });
    for (std::size_t n = 1; n < entries_.size(); ++n) {
        const auto& a = entries_[n - 1];
        const auto& b = entries_[n];
        if (a.recording == b.recording && a.species == b.species && a.annotator == b.annotator) {
            throw DataError("duplicate annotation for (recording " + std::to_string(a.recording) +
                            ", annotator " + std::to_string(a.annotator) + ", species " +
                            std::to_string(a.species) + ")");
        }
    }

    const std::size_t n_cells = dims_.recordings * dims_.species;
    cell_offsets_.assign(n_cells + 1, 0);
    for (const auto& e : entries_) ++cell_offsets_[e.recording * dims_.species + e.species + 1];
    for (std::size_t c = 0; c < n_cells; ++c) cell_offsets_[c + 1] += cell_offsets_[c];

    annotator_offsets_.assign(dims_.annotators + 1, 0);
    for (const auto& e : entries_) ++annotator_offsets_[e.annotator + 1];
    for (std::size_t j = 0; j < dims_.annotators; ++j) annotator_offsets_[j + 1] += annotator_offsets_[j];
    by_annotator_.resize(entries_.size());
    std::vector<std::uint32_t> cursor(annotator_offsets_.begin(), annotator_offsets_.end() - 1);
    // entries_ is (recording, species)-major, so each annotator's run stays sorted.
    for (std::size_t n = 0; n < entries_.size(); ++n) {
        const auto& e = entries_[n];
        by_annotator_[cursor[e.annotator]++] =
            AnnotatedCell{e.recording, e.species, e.label, static_cast<std::uint32_t>(n)};
    }
}

std::span<const Annotation> AnnotationTensor::votes(std::size_t recording, std::size_t species) const {
    const std::size_t c = recording * dims_.species + species;
    return std::span<const Annotation>(entries_).subspan(cell_offsets_[c],
                                                         cell_offsets_[c + 1] - cell_offsets_[c]);
}

std::span<const AnnotatedCell> AnnotationTensor::cells_of(std::size_t annotator) const {
    return std::span<const AnnotatedCell>(by_annotator_)
        .subspan(annotator_offsets_[annotator],
                 annotator_offsets_[annotator + 1] - annotator_offsets_[annotator]);
}

double AnnotationTensor::missing_rate() const {
    const double total = static_cast<double>(dims_.recordings) * dims_.annotators * dims_.species;
    if (total == 0.0) return 1.0;
    return 1.0 - static_cast<double>(entries_.size()) / total;
}

// ---------------------------------------------------------------------------
// ExpertiseSets

ExpertiseSets::ExpertiseSets(std::size_t n_annotators, std::size_t n_species)
    : n_annotators_(n_annotators),
      n_species_(n_species),
      mask_(n_annotators * n_species, 1),
      lists_(n_annotators) {
    for (std::size_t j = 0; j < n_annotators; ++j) rebuild_list(j);
}

void ExpertiseSets::set(std::size_t annotator, std::size_t species, bool member) {
    mask_[annotator * n_species_ + species] = member ? 1 : 0;
    rebuild_list(annotator);
}

void ExpertiseSets::rebuild_list(std::size_t annotator) {
    auto& list = lists_[annotator];
    list.clear();
    for (std::size_t k = 0; k < n_species_; ++k) {
        if (mask_[annotator * n_species_ + k]) list.push_back(static_cast<std::uint32_t>(k));
    }
}

std::size_t ExpertiseSets::total_memberships() const {
    std::size_t total = 0;
    for (const auto& l : lists_) total += l.size();
    return total;
}

void check_expertise_consistency(const ExpertiseSets& sets, const AnnotationTensor& tensor) {
    if (sets.n_annotators() != tensor.n_annotators() || sets.n_species() != tensor.n_species()) {
        throw DataError("expertise sets do not match tensor dimensions");
    }
    for (const auto& e : tensor.entries()) {
        if (!sets.contains(e.annotator, e.species)) {
            throw DataError("annotator " + std::to_string(e.annotator) + " annotated species " +
                            std::to_string(e.species) + " outside their declared expertise set");
        }
    }
}

// ---------------------------------------------------------------------------
// IdMap

std::uint32_t IdMap::intern(Kind kind, const std::string& external_id) {
    auto& lookup = lookup_[index(kind)];
    auto it = lookup.find(external_id);
    if (it != lookup.end()) return it->second;
    auto& ids = ids_[index(kind)];
    const auto idx = static_cast<std::uint32_t>(ids.size());
    ids.push_back(external_id);
    lookup.emplace(external_id, idx);
    return idx;
}

std::optional<std::uint32_t> IdMap::find(Kind kind, const std::string& external_id) const {
    const auto& lookup = lookup_[index(kind)];
    auto it = lookup.find(external_id);
    if (it == lookup.end()) return std::nullopt;
    return it->second;
}

namespace {
constexpr const char* kKindNames[3] = {"recording", "annotator", "species"};
}

void IdMap::write(std::ostream& out) const {
    out << "kind,external_id,index\n";
    for (std::size_t kind = 0; kind < 3; ++kind) {
        for (std::size_t n = 0; n < ids_[kind].size(); ++n) {
            out << kKindNames[kind] << ',' << ids_[kind][n] << ',' << n << '\n';
        }
    }
}

IdMap IdMap::read(std::istream& in) {
    csv::Reader reader(in, "id map");
    reader.expect_header({"kind", "external_id", "index"});
    IdMap map;
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 3) reader.fail("expected 3 fields");
        std::size_t kind = 3;
        for (std::size_t k = 0; k < 3; ++k) {
            if (f[0] == kKindNames[k]) kind = k;
        }
        if (kind == 3) reader.fail("unknown kind '" + f[0] + "'");
        const auto idx = reader.parse_index(f[2], "index");
        if (idx != map.ids_[kind].size()) reader.fail("indices must be dense and in order");
        if (map.lookup_[kind].count(f[1])) reader.fail("duplicate external id '" + f[1] + "'");
        map.intern(static_cast<Kind>(kind), f[1]);
    }
    return map;
}

// ---------------------------------------------------------------------------
// File formats

AnnotationTensor load_annotations(std::istream& in, std::optional<Dims> dims) {
    csv::Reader reader(in, "annotations");
    reader.expect_header({"recording", "annotator", "species", "label"});
    std::vector<Annotation> entries;
    Dims inferred;
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 4) reader.fail("expected 4 fields");
        Annotation a{reader.parse_index(f[0], "recording"), reader.parse_index(f[1], "annotator"),
                     reader.parse_index(f[2], "species"), reader.parse_label(f[3])};
        if (dims && (a.recording >= dims->recordings || a.annotator >= dims->annotators ||
                     a.species >= dims->species)) {
            reader.fail("index out of declared range");
        }
        inferred.recordings = std::max<std::size_t>(inferred.recordings, a.recording + 1);
        inferred.annotators = std::max<std::size_t>(inferred.annotators, a.annotator + 1);
        inferred.species = std::max<std::size_t>(inferred.species, a.species + 1);
        entries.push_back(a);
    }
    return AnnotationTensor(dims.value_or(inferred), std::move(entries));
}

void write_annotations(std::ostream& out, const AnnotationTensor& tensor) {
    out << "recording,annotator,species,label\n";
    for (const auto& e : tensor.entries()) {
        out << e.recording << ',' << e.annotator << ',' << e.species << ',' << int(e.label) << '\n';
    }
}

AnnotationTensor import_annotations(std::istream& in, IdMap& ids,
                                    const std::vector<std::string>& unidentified_markers) {
    csv::Reader reader(in, "annotations");
    reader.expect_header({"recording", "annotator", "species", "label"});
    struct Row {
        std::string recording, annotator, species;
        std::uint8_t label;
    };
    std::vector<Row> rows;
    std::set<std::string> seen[3];
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 4) reader.fail("expected 4 fields");
        if (std::find(unidentified_markers.begin(), unidentified_markers.end(), f[2]) !=
            unidentified_markers.end()) {
            continue;
        }
        if (f[0].empty() || f[1].empty()) reader.fail("empty identifier");
        rows.push_back(Row{f[0], f[1], f[2], reader.parse_label(f[3])});
        seen[0].insert(f[0]);
        seen[1].insert(f[1]);
        seen[2].insert(f[2]);
    }
    // Sorted interning keeps indices independent of row order.
    for (std::size_t kind = 0; kind < 3; ++kind) {
        for (const auto& id : seen[kind]) ids.intern(static_cast<IdMap::Kind>(kind), id);
    }
    std::vector<Annotation> entries;
    entries.reserve(rows.size());
    for (const auto& r : rows) {
        entries.push_back(Annotation{*ids.find(IdMap::Kind::Recording, r.recording),
                                     *ids.find(IdMap::Kind::Annotator, r.annotator),
                                     *ids.find(IdMap::Kind::Species, r.species), r.label});
    }
    Dims dims{ids.size(IdMap::Kind::Recording), ids.size(IdMap::Kind::Annotator),
              ids.size(IdMap::Kind::Species)};
    return AnnotationTensor(dims, std::move(entries));
}

ExpertiseSets load_expertise(std::istream* in, const AnnotationTensor& tensor) {
    if (in == nullptr) return ExpertiseSets::full(tensor.n_annotators(), tensor.n_species());
    csv::Reader reader(*in, "expertise");
    reader.expect_header({"annotator", "species"});
    ExpertiseSets sets(tensor.n_annotators(), tensor.n_species());
    for (std::size_t j = 0; j < tensor.n_annotators(); ++j) {
        for (std::size_t k = 0; k < tensor.n_species(); ++k) sets.set(j, k, false);
    }
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 2) reader.fail("expected 2 fields");
        const auto j = reader.parse_index(f[0], "annotator");
        const auto k = reader.parse_index(f[1], "species");
        if (j >= tensor.n_annotators() || k >= tensor.n_species()) {
            reader.fail("index out of tensor range");
        }
        sets.set(j, k, true);
    }
    check_expertise_consistency(sets, tensor);
    return sets;
}

void write_expertise(std::ostream& out, const ExpertiseSets& sets) {
    out << "annotator,species\n";
    for (std::size_t j = 0; j < sets.n_annotators(); ++j) {
        for (auto k : sets.species_of(j)) out << j << ',' << k << '\n';
    }
}

GoldStandard load_gold_standard(std::istream& in, const Dims& dims) {
    csv::Reader reader(in, "gold standard");
    reader.expect_header({"recording", "species", "label"});
    GoldStandard gold;
    std::vector<std::string> f;
    while (reader.next(f)) {
        if (f.size() != 3) reader.fail("expected 3 fields");
        GoldLabel g{reader.parse_index(f[0], "recording"), reader.parse_index(f[1], "species"),
                    reader.parse_label(f[2])};
        if (g.recording >= dims.recordings || g.species >= dims.species) {
            reader.fail("index out of tensor range");
        }
        gold.labels.push_back(g);
    }
    std::sort(gold.labels.begin(), gold.labels.end(), [](const GoldLabel& a, const GoldLabel& b) {
        return std::tie(a.recording, a.species) < std::tie(b.recording, b.species);
    });
    for (std::size_t n = 1; n < gold.labels.size(); ++n) {
        if (gold.labels[n].recording == gold.labels[n - 1].recording &&
            gold.labels[n].species == gold.labels[n - 1].species) {
            throw DataError("gold standard: duplicate cell (" +
                            std::to_string(gold.labels[n].recording) + "," +
                            std::to_string(gold.labels[n].species) + ")");
        }
    }
    return gold;
}

void write_gold_standard(std::ostream& out, const GoldStandard& gold) {
    out << "recording,species,label\n";
    for (const auto& g : gold.labels) out << g.recording << ',' << g.species << ',' << int(g.label) << '\n';
}

DatasetSummary summarize(const AnnotationTensor& tensor) {
    DatasetSummary s;
    s.dims = tensor.dims();
    s.observed_cells = tensor.size();
    s.missing_rate = tensor.missing_rate();
    s.annotations_per_annotator.assign(tensor.n_annotators(), 0);
    s.recordings_per_annotator.assign(tensor.n_annotators(), 0);
    s.positives_per_species.assign(tensor.n_species(), 0);
    for (std::size_t j = 0; j < tensor.n_annotators(); ++j) {
        const auto cells = tensor.cells_of(j);
        s.annotations_per_annotator[j] = cells.size();
        std::size_t distinct = 0;
        for (std::size_t n = 0; n < cells.size(); ++n) {
            if (n == 0 || cells[n].recording != cells[n - 1].recording) ++distinct;
        }
        s.recordings_per_annotator[j] = distinct;
    }
    for (const auto& e : tensor.entries()) s.positives_per_species[e.species] += e.label;
    if (tensor.n_annotators() > 0) {
        double total = 0.0;
        for (auto r : s.recordings_per_annotator) total += static_cast<double>(r);
        s.mean_recordings_per_annotator = total / static_cast<double>(tensor.n_annotators());
    }
    return s;
}

}  // namespace crowdlabel
