#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "crowdal/dataset.hpp"

namespace crowdal {

struct WorkerModel {
    std::map<int, double> subgroup_accuracy;  // g -> p_g, strictly in (0,1)
    int workers_per_label = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Vote {
    int worker_id = 0;
    int label = 0;
};

struct VoteSet {
    std::map<int, std::vector<Vote>> by_item;

    int total_votes() const;
};

struct PBAConfig {
    int subgroups = 20;    // G
    int probe_items = 2;   // n0 per subgroup, > 1
    int probe_votes = 9;   // v0 per probe item, odd
    int max_votes = 9;     // b_max, odd
    long vote_budget = 0;  // B

    void validate() const;
};

struct PBAAllocation {
    std::map<int, int> votes_per_group;  // g -> V_g, odd in [1, max_votes]
    double expected_error = 0.0;
    long cost = 0;
};

// Each vote equals the item's gold label with probability p_{g(item)},
// independently. The transcript depends only on (seed, item id, vote index),
// never on request order.
VoteSet simulate_votes(const WorkerModel& model, const std::vector<Item>& items,
                       const std::map<int, int>& votes_per_item);
VoteSet simulate_votes(const WorkerModel& model, const std::vector<Item>& items,
                       int votes_per_item);

// most frequent label per item; even-count ties go to class 1
std::map<int, int> aggregate_majority(const VoteSet& votes);

// EM over per-worker binary confusion matrices and per-item class posteriors.
// Initialized from the majority vote; stops at max posterior change < 1e-6
// or 100 iterations; posterior ties go to class 1.
std::map<int, int> aggregate_dawid_skene(const VoteSet& votes);

struct DawidSkeneDiagnostics {
    std::map<int, int> labels;
    std::map<int, double> worker_accuracy;  // mean diagonal of the confusion matrix
    int iterations = 0;
};
DawidSkeneDiagnostics aggregate_dawid_skene_full(const VoteSet& votes);

enum class ProbeMode { Gold, MajorityAsTruth };

// Fraction of probe votes matching gold (or each item's majority vote),
// per subgroup, clamped to [0.51, 0.99] for downstream allocation.
std::map<int, double> estimate_subgroup_accuracy(const VoteSet& votes,
                                                 const std::vector<Item>& probe_items,
                                                 ProbeMode mode,
                                                 const std::vector<int>& expected_groups = {});

// P_{g,b}: probability a b-vote majority of accuracy-p workers is correct
double majority_correct_prob(double p, int b);

// Exact optimum over odd per-group vote counts, by dynamic programming over
// (group, remaining budget). Objective ties break toward lower total cost,
// then the lexicographically smaller vote vector (by group id).
PBAAllocation pba_allocate(const PBAConfig& pba, const std::map<int, double>& p_hat,
                           const std::map<int, int>& group_sizes);

// Exhaustive test oracle; guards G <= 6 and b_max <= 7
PBAAllocation pba_brute_force(const PBAConfig& pba, const std::map<int, double>& p_hat,
                              const std::map<int, int>& group_sizes);

struct AskedQuestion {
    int item_id = -1;
    int subgroup = 0;
    int votes = 1;
};

class AnswerSource {
public:
    virtual ~AnswerSource() = default;
    virtual VoteSet request(const std::vector<AskedQuestion>& asks) = 0;
};

class SimulatedCrowd : public AnswerSource {
public:
    SimulatedCrowd(WorkerModel model, const std::vector<Item>& items);
    VoteSet request(const std::vector<AskedQuestion>& asks) override;

private:
    WorkerModel model_;
    std::map<int, Item> items_;
};

// answers are the gold labels; isolates ranker behavior from crowd noise
class GoldReplay : public AnswerSource {
public:
    explicit GoldReplay(const std::vector<Item>& items);
    VoteSet request(const std::vector<AskedQuestion>& asks) override;

private:
    std::map<int, int> gold_;
};

// Appends pending questions to a CSV file and polls an append-only answers
// file until every asked item has enough votes. Single consumer.
// questions: item_id,subgroup,votes_requested   answers: item_id,worker_id,label
class FileQueue : public AnswerSource {
public:
    FileQueue(std::string questions_path, std::string answers_path,
              double poll_seconds = 0.2, double timeout_seconds = 60.0);
    VoteSet request(const std::vector<AskedQuestion>& asks) override;

private:
    std::string questions_path_;
    std::string answers_path_;
    double poll_seconds_;
    double timeout_seconds_;
};

}  // namespace crowdal
