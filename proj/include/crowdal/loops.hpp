#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdal/classifier.hpp"
#include "crowdal/crowd.hpp"
#include "crowdal/dataset.hpp"
#include "crowdal/rankers.hpp"

namespace crowdal {

struct Budget {
    int total_questions = 0;
    int spent = 0;
};

struct QualityTarget {
    Metric metric = Metric::Accuracy;
    double threshold = 0.0;  // Q in (0,1]
};

// budget and/or quality target; iterative runs always bound the loop by
// min(budget, |U|) questions
struct StopRule {
    std::optional<int> budget;
    std::optional<QualityTarget> quality;

    static StopRule for_budget(int b) { return {b, std::nullopt}; }
    static StopRule for_quality(QualityTarget q) { return {std::nullopt, q}; }
};

struct LoopConfig {
    int ensemble_size = 10;
    int minexp_cv_folds = 3;  // effective folds: min(this, |labeled|)
    double smoothing_c = 1.0;
    int quality_folds = 5;    // k for the cross-validation stopping estimate
    Metric metric = Metric::Accuracy;
    bool use_dawid_skene = false;
    int votes_per_question = 1;
    std::optional<PBAConfig> pba;
    ProbeMode probe_mode = ProbeMode::MajorityAsTruth;
    bool record_cv = true;
    unsigned threads = 1;
};

struct IterationRecord {
    int iteration = 0;
    std::vector<int> asked;        // draw order
    int votes_used = 0;
    std::map<int, int> answers;    // item id -> aggregated crowd label
    // quality of the model trained on the labeled pool at scoring time;
    // NaN when not computed
    double cv_estimate = 0.0;
    double test_quality = 0.0;
    int labeled_size = 0;
    int unlabeled_size = 0;
};

enum class LabelSource { Crowd, Model };

struct FinalLabel {
    int label = 0;
    LabelSource source = LabelSource::Model;
};

struct RunLog {
    std::vector<IterationRecord> iterations;
    std::map<int, FinalLabel> final_labels;  // covers every initially unlabeled item
    int questions = 0;                       // crowd-labeled items
    int votes = 0;
    std::vector<std::string> warnings;

    std::string to_jsonl() const;
    static RunLog from_jsonl(const std::string& text);
};

// replays a RunLog's recorded answers (one vote per item) so a rerun with the
// same seed reproduces final_labels exactly
class ReplayAnswerSource : public AnswerSource {
public:
    explicit ReplayAnswerSource(const RunLog& log);
    VoteSet request(const std::vector<AskedQuestion>& asks) override;

private:
    std::map<int, int> answers_;
};

// Fig. 1: train once on L0, score once, split U between crowd and model.
// Crowd labels never join the training data.
RunLog run_upfront(const PoolSplit& pools, const ClassifierSpec& spec, RankerKind ranker,
                   const StopRule& stop, AnswerSource& source, const LoopConfig& config,
                   std::uint64_t seed);

// Fig. 2: score, select a batch, crowd-label it, retrain on L0 u CL, repeat
// until the budget is exhausted or the quality estimate meets the target.
RunLog run_iterative(const PoolSplit& pools, const ClassifierSpec& spec, RankerKind ranker,
                     const StopRule& stop, int batch_size, AnswerSource& source,
                     const LoopConfig& config, std::uint64_t seed);

// 10% of the budget, floored at one question
int default_batch_size(int budget);

}  // namespace crowdal
