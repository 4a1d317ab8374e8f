#include "crowdlabel/pipeline.hpp"

#include "crowdlabel/errors.hpp"

namespace crowdlabel {

EvaluationReport evaluate_store(const DrawStore& store, const AnnotationTensor& tensor,
                                const GoldStandard& gold, const SimTruth* truth) {
    if (store.dims != tensor.dims()) throw DataError("fitted store and tensor dimensions differ");
    if (gold.labels.empty()) throw DataError("gold standard is empty");
    EvaluationReport report;
    const std::size_t n3 = tensor.n_species();
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    gold_cells(posterior_label_probabilities(store), n3, gold, scores, labels);
    report.model_roc = roc_auc(scores, labels);
    report.brier = brier(scores, labels);
    report.n_cells = scores.size();

    gold_cells(majority_vote(tensor), n3, gold, scores, labels);
    report.majority_roc = roc_auc(scores, labels);
    report.majority_brier = brier(scores, labels);

    for (const auto& c : store.chains) {
        if (c.waic.n_draws() > 0) {
            report.waic = pooled_waic(store);
            report.has_waic = true;
            break;
        }
    }
    if (truth) {
        if (truth->avg_tpr.size() != tensor.n_annotators()) {
            throw DataError("truth annotator count does not match the tensor");
        }
        report.tpr = expertise_coverage_mse(annotator_rate_draws(store, true), truth->avg_tpr);
        report.fpr = expertise_coverage_mse(annotator_rate_draws(store, false), truth->avg_fpr);
        report.has_coverage = true;
    }
    return report;
}

}  // namespace crowdlabel
