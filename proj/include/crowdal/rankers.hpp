#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdal/bootstrap.hpp"
#include "crowdal/classifier.hpp"
#include "crowdal/dataset.hpp"

namespace crowdal {

enum class RankerKind { Uncertainty, MinExpError, MarginDistance, Baseline };

RankerKind ranker_from_string(const std::string& name);
std::string ranker_to_string(RankerKind kind);

// per-item effectiveness scores over the current unlabeled pool,
// stored id-sorted; all scores finite and >= 0
struct ScoreVector {
    RankerKind ranker_kind = RankerKind::Baseline;
    std::vector<std::pair<int, double>> entries;  // (item id, score)

    double at(int item_id) const;
    double sum() const;
};

struct SelectionBatch {
    std::vector<int> item_ids;  // draw order, no duplicates
    std::uint64_t seed = 0;
};

// variance of the bootstrapped labels: score = R(u)(1 - R(u)) with R the
// fraction of members voting 1
ScoreVector uncertainty_scores(const LabelMatrix& label_matrix);

// Expected post-acquisition training error, turned into a sampling score:
//   p_hat(u)  = fraction of ensemble members agreeing with the base model
//   e_right   = CV 0/1 error with (u, predicted label) appended to training
//   e_wrong   = same with the flipped label
//   raw(u)    = 1 - (p_hat*e_right + (1-p_hat)*e_wrong) + c
// renormalized to sum 1. One fold partition is drawn per call and shared by
// all candidates; the candidate joins every training fold, never a test fold.
ScoreVector min_exp_error_scores(const ClassifierSpec& spec, const LabeledSet& labeled,
                                 const Ensemble& ensemble, const std::vector<Item>& unlabeled,
                                 int cv_folds, std::uint64_t seed, double smoothing_c = 1.0,
                                 unsigned threads = 1);

// 1 / (1 + |w.x + b|): favors items near the separator
ScoreVector margin_distance_scores(const TrainedModel& model, const std::vector<Item>& unlabeled);

ScoreVector baseline_scores(const std::vector<Item>& unlabeled);

// Sequential weighted draws without replacement, each proportional to the
// remaining scores; an all-zero remainder falls back to uniform draws.
SelectionBatch select_batch(const ScoreVector& scores, int batch_size, std::uint64_t seed);

}  // namespace crowdal
