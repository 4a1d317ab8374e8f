#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace crowdlabel {

/// Tensor extents: recordings × annotators × species.
struct Dims {
    std::size_t recordings = 0;
    std::size_t annotators = 0;
    std::size_t species = 0;

    bool operator==(const Dims&) const = default;
};

/// One observed report: annotator says species is present (1) or absent (0)
/// in a recording.
struct Annotation {
    std::uint32_t recording = 0;
    std::uint32_t annotator = 0;
    std::uint32_t species = 0;
    std::uint8_t label = 0;

    bool operator==(const Annotation&) const = default;
};

/// A cell of one annotator's workload.
struct AnnotatedCell {
    std::uint32_t recording = 0;
    std::uint32_t species = 0;
    std::uint8_t label = 0;
    std::uint32_t entry = 0;  // position in AnnotationTensor::entries()
};

/// Sparse annotation tensor. Unobserved cells are simply absent.
///
/// Entries are sorted by (recording, species, annotator), so the votes on a
/// (recording, species) cell are a contiguous run of entries(). A second
/// index groups entries by annotator. Immutable after construction.
class AnnotationTensor {
public:
    AnnotationTensor() = default;

    /// Validates indices, labels and uniqueness; throws DataError otherwise.
    AnnotationTensor(Dims dims, std::vector<Annotation> entries);

    const Dims& dims() const noexcept { return dims_; }
    std::size_t n_recordings() const noexcept { return dims_.recordings; }
    std::size_t n_annotators() const noexcept { return dims_.annotators; }
    std::size_t n_species() const noexcept { return dims_.species; }

    std::span<const Annotation> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    /// Votes on cell (recording, species), ordered by annotator.
    std::span<const Annotation> votes(std::size_t recording, std::size_t species) const;
    /// Offset of the first vote of the cell within entries().
    std::size_t cell_begin(std::size_t recording, std::size_t species) const {
        return cell_offsets_[recording * dims_.species + species];
    }

    /// All cells labeled by one annotator, ordered by (recording, species).
    std::span<const AnnotatedCell> cells_of(std::size_t annotator) const;

    double missing_rate() const;

private:
    Dims dims_;
    std::vector<Annotation> entries_;
    std::vector<std::uint32_t> cell_offsets_;       // size recordings*species + 1
    std::vector<AnnotatedCell> by_annotator_;
    std::vector<std::uint32_t> annotator_offsets_;  // size annotators + 1
};

/// Per-annotator species lists l_j: annotator j's reports are only modeled
/// for species in l_j.
class ExpertiseSets {
public:
    ExpertiseSets() = default;
    ExpertiseSets(std::size_t n_annotators, std::size_t n_species);  // all species for all

    static ExpertiseSets full(std::size_t n_annotators, std::size_t n_species) {
        return ExpertiseSets(n_annotators, n_species);
    }

    std::size_t n_annotators() const noexcept { return n_annotators_; }
    std::size_t n_species() const noexcept { return n_species_; }

    bool contains(std::size_t annotator, std::size_t species) const {
        return mask_[annotator * n_species_ + species] != 0;
    }
    void set(std::size_t annotator, std::size_t species, bool member);
    const std::vector<std::uint32_t>& species_of(std::size_t annotator) const {
        return lists_[annotator];
    }
    std::size_t total_memberships() const;

private:
    void rebuild_list(std::size_t annotator);

    std::size_t n_annotators_ = 0;
    std::size_t n_species_ = 0;
    std::vector<std::uint8_t> mask_;
    std::vector<std::vector<std::uint32_t>> lists_;
};

struct GoldLabel {
    std::uint32_t recording = 0;
    std::uint32_t species = 0;
    std::uint8_t label = 0;
};

/// Expert-verified truth on a subset of (recording, species) cells, sorted
/// by (recording, species).
struct GoldStandard {
    std::vector<GoldLabel> labels;
};

struct DatasetSummary {
    Dims dims;
    std::size_t observed_cells = 0;
    double missing_rate = 1.0;
    double mean_recordings_per_annotator = 0.0;
    std::vector<std::size_t> annotations_per_annotator;
    std::vector<std::size_t> recordings_per_annotator;
    std::vector<std::size_t> positives_per_species;
};

/// External-ID ↔ dense-index table for recordings, annotators and species.
class IdMap {
public:
    enum class Kind { Recording, Annotator, Species };

    std::uint32_t intern(Kind kind, const std::string& external_id);
    std::optional<std::uint32_t> find(Kind kind, const std::string& external_id) const;
    const std::vector<std::string>& ids(Kind kind) const { return ids_[index(kind)]; }
    std::size_t size(Kind kind) const { return ids_[index(kind)].size(); }

    void write(std::ostream& out) const;
    static IdMap read(std::istream& in);

private:
    static std::size_t index(Kind kind) { return static_cast<std::size_t>(kind); }

    std::vector<std::string> ids_[3];
    std::map<std::string, std::uint32_t> lookup_[3];
};

/// Reads `recording,annotator,species,label` rows with dense 0-based indices.
/// Dimensions are inferred from the maximum indices unless given.
AnnotationTensor load_annotations(std::istream& in, std::optional<Dims> dims = std::nullopt);
void write_annotations(std::ostream& out, const AnnotationTensor& tensor);

/// Reads the same layout with arbitrary string IDs, assigning dense indices in
/// sorted-ID order. Rows whose species ID is one of `unidentified_markers`
/// (records of an unidentified species) are dropped; no model term uses them.
AnnotationTensor import_annotations(std::istream& in, IdMap& ids,
                                    const std::vector<std::string>& unidentified_markers = {
                                        "", "NA", "unknown"});

/// Reads `annotator,species` membership rows. A null stream means no file:
/// every annotator gets every species. Throws DataError if an annotation
/// falls outside its annotator's declared set.
ExpertiseSets load_expertise(std::istream* in, const AnnotationTensor& tensor);
void write_expertise(std::ostream& out, const ExpertiseSets& sets);

/// Throws DataError if any entry of `tensor` lies outside `sets`.
void check_expertise_consistency(const ExpertiseSets& sets, const AnnotationTensor& tensor);

/// Reads `recording,species,label` rows, validated against `dims`.
GoldStandard load_gold_standard(std::istream& in, const Dims& dims);
void write_gold_standard(std::ostream& out, const GoldStandard& gold);

DatasetSummary summarize(const AnnotationTensor& tensor);

}  // namespace crowdlabel
