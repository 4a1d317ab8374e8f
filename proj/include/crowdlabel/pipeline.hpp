#pragma once

#include "crowdlabel/chain.hpp"
#include "crowdlabel/evaluation.hpp"
#include "crowdlabel/simulation.hpp"

namespace crowdlabel {

/// Scores a fitted store against gold-standard cells, with the majority-vote
/// baseline from the same tensor. WAIC is included when the chains recorded
/// it; TPR/FPR coverage and MSE when `truth` is given (compared with the
/// annotators' average rates).
EvaluationReport evaluate_store(const DrawStore& store, const AnnotationTensor& tensor,
                                const GoldStandard& gold, const SimTruth* truth = nullptr);

}  // namespace crowdlabel
