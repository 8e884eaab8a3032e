#include "crowdal/loops.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "crowdal/bootstrap.hpp"
#include "crowdal/metrics.hpp"
#include "crowdal/rng.hpp"
#include "json.hpp"

namespace crowdal {

namespace {

constexpr std::uint64_t kTagBase = 1;
constexpr std::uint64_t kTagEnsemble = 2;
constexpr std::uint64_t kTagScores = 3;
constexpr std::uint64_t kTagSelect = 4;
constexpr std::uint64_t kTagCv = 5;
constexpr std::uint64_t kTagFinal = 6;

ScoreVector compute_scores(RankerKind ranker, const ClassifierSpec& spec,
                           const LabeledSet& labeled, const TrainedModel& model,
                           const Ensemble& ensemble, const std::vector<Item>& unlabeled,
                           const LoopConfig& config, std::uint64_t seed) {
    switch (ranker) {
        case RankerKind::Uncertainty:
            return uncertainty_scores(ensemble_labels(ensemble, unlabeled, config.threads));
        case RankerKind::MinExpError: {
            int folds = std::min<int>(config.minexp_cv_folds, static_cast<int>(labeled.size()));
            return min_exp_error_scores(spec, labeled, ensemble, unlabeled, folds, seed,
                                        config.smoothing_c, config.threads);
        }
        case RankerKind::MarginDistance:
            return margin_distance_scores(model, unlabeled);
        case RankerKind::Baseline:
            return baseline_scores(unlabeled);
    }
    throw std::runtime_error("compute_scores: unknown ranker");
}

// crowd conversation state shared by both scenarios: PBA probing/allocation,
// vote accounting, duplicate protection
class CrowdSession {
public:
    CrowdSession(AnswerSource& source, const LoopConfig& config, RunLog& log)
        : source_(source), config_(config), log_(log) {
        if (config_.pba) {
            config_.pba->validate();
            votes_remaining_ = config_.pba->vote_budget;
        }
    }

    // asks the crowd about `items` and returns aggregated labels per item
    std::map<int, int> ask(const std::vector<Item>& items) {
        if (items.empty()) return {};
        std::vector<AskedQuestion> asks;
        if (config_.pba) {
            asks = plan_pba(items);
        } else {
            for (const auto& item : items)
                asks.push_back({item.id, item.subgroup, config_.votes_per_question});
        }

        std::map<int, int> labels;
        if (!asks.empty()) {
            VoteSet votes = source_.request(asks);
            int used = 0;
            for (const auto& ask : asks) {
                auto v = votes.by_item.find(ask.item_id);
                if (v == votes.by_item.end() || static_cast<int>(v->second.size()) < ask.votes)
                    throw std::runtime_error("answer source returned too few votes for item " +
                                             std::to_string(ask.item_id));
                used += static_cast<int>(v->second.size());
            }
            log_.votes += used;
            if (config_.pba) votes_remaining_ -= used;

            auto aggregated = config_.use_dawid_skene ? aggregate_dawid_skene(votes)
                                                      : aggregate_majority(votes);
            // probe items are answered separately; see take_probe_labels
            for (const auto& item : items) {
                auto a = aggregated.find(item.id);
                if (a != aggregated.end()) labels[item.id] = a->second;
            }
        }
        return labels;
    }

private:
    std::vector<AskedQuestion> plan_pba(const std::vector<Item>& items) {
        const PBAConfig& pba = *config_.pba;

        // probe newly seen subgroups: n0 items (or what the batch has), v0 votes
        std::map<int, std::vector<const Item*>> by_group;
        for (const auto& item : items) by_group[item.subgroup].push_back(&item);

        std::vector<Item> probe_items;
        std::set<int> probe_ids;
        for (const auto& [g, members] : by_group) {
            if (p_hat_.count(g)) continue;
            int take = std::min<int>(pba.probe_items, static_cast<int>(members.size()));
            for (int i = 0; i < take; ++i) {
                probe_items.push_back(*members[static_cast<std::size_t>(i)]);
                probe_ids.insert(members[static_cast<std::size_t>(i)]->id);
            }
        }

        long probe_cost = static_cast<long>(probe_items.size()) * pba.probe_votes;
        long allocatable = votes_remaining_ - probe_cost;
        std::map<int, int> group_sizes;
        for (const auto& item : items)
            if (!probe_ids.count(item.id)) group_sizes[item.subgroup]++;
        long min_needed = 0;
        for (const auto& [g, f] : group_sizes) min_needed += f;
        if (allocatable < min_needed)
            throw std::runtime_error(
                "pba vote budget exhausted: need at least " +
                std::to_string(min_needed + probe_cost) + " more votes");

        std::vector<AskedQuestion> asks;
        for (const auto& item : probe_items) asks.push_back({item.id, item.subgroup, pba.probe_votes});

        if (!probe_items.empty()) {
            VoteSet probe_votes = source_.request(asks);
            log_.votes += static_cast<int>(probe_cost);
            votes_remaining_ -= probe_cost;
            auto estimates =
                estimate_subgroup_accuracy(probe_votes, probe_items, config_.probe_mode);
            for (const auto& [g, p] : estimates) p_hat_[g] = p;
            // probe votes double as these items' label votes
            probe_votes_cache_ = std::move(probe_votes);
        }

        std::map<int, double> p_for_alloc;
        for (const auto& [g, f] : group_sizes) {
            auto e = p_hat_.find(g);
            p_for_alloc[g] = e != p_hat_.end() ? e->second : 0.51;
        }

        std::map<int, int> votes_per_group;
        if (!group_sizes.empty()) {
            PBAConfig instance = pba;
            instance.vote_budget = votes_remaining_;  // probes already deducted
            PBAAllocation alloc = pba_allocate(instance, p_for_alloc, group_sizes);
            votes_per_group = alloc.votes_per_group;
        }

        std::vector<AskedQuestion> label_asks;
        for (const auto& item : items) {
            if (probe_ids.count(item.id)) continue;
            label_asks.push_back({item.id, item.subgroup, votes_per_group.at(item.subgroup)});
        }
        return label_asks;
    }

    AnswerSource& source_;
    LoopConfig config_;
    RunLog& log_;
    long votes_remaining_ = 0;
    std::map<int, double> p_hat_;
    VoteSet probe_votes_cache_;

public:
    // aggregated labels for items answered during probing
    std::map<int, int> take_probe_labels() {
        std::map<int, int> labels;
        if (!probe_votes_cache_.by_item.empty()) {
            auto agg = config_.use_dawid_skene ? aggregate_dawid_skene(probe_votes_cache_)
                                               : aggregate_majority(probe_votes_cache_);
            labels = std::move(agg);
            probe_votes_cache_ = VoteSet{};
        }
        return labels;
    }
};

double model_quality_on(const TrainedModel& model, const LabeledSet& examples, Metric metric) {
    std::vector<int> predicted;
    std::vector<int> gold;
    for (const auto& ex : examples) {
        predicted.push_back(predict(model, ex.item));
        gold.push_back(ex.label);
    }
    return quality(metric, predicted, gold);
}

double nan_value() { return std::nan(""); }

}  // namespace

int default_batch_size(int budget) {
    if (budget < 1) throw std::runtime_error("default_batch_size: budget must be >= 1");
    return std::max(1, static_cast<int>(std::lround(0.1 * budget)));
}

RunLog run_upfront(const PoolSplit& pools, const ClassifierSpec& spec, RankerKind ranker,
                   const StopRule& stop, AnswerSource& source, const LoopConfig& config,
                   std::uint64_t seed) {
    if (!stop.budget && !stop.quality)
        throw std::runtime_error("run_upfront: stop rule needs a budget or a quality target");
    if (pools.initial_labeled.empty()) throw std::runtime_error("run_upfront: empty L0");

    RunLog log;
    const LabeledSet& l0 = pools.initial_labeled;
    const std::vector<Item>& pool = pools.unlabeled;

    TrainedModel model = train(spec, l0, hash64(seed, kTagBase, 0));
    Ensemble ensemble =
        train_ensemble(spec, l0, config.ensemble_size, hash64(seed, kTagEnsemble, 0),
                       config.threads);
    ScoreVector scores = compute_scores(ranker, spec, l0, model, ensemble, pool, config,
                                        hash64(seed, kTagScores, 0));

    std::vector<int> crowd_ids;
    if (stop.budget) {
        int budget = *stop.budget;
        if (budget > static_cast<int>(pool.size())) {
            log.warnings.push_back("budget " + std::to_string(budget) + " clamped to pool size " +
                                   std::to_string(pool.size()));
            budget = static_cast<int>(pool.size());
        }
        if (budget > 0)
            crowd_ids = select_batch(scores, budget, hash64(seed, kTagSelect, 0)).item_ids;
    } else {
        // Fig. 1 lines 8-11: machine-label the lowest-score prefix whose
        // estimated accuracy (mean ensemble agreement with the base model)
        // meets Q; the crowd labels the rest
        LabelMatrix matrix = ensemble_labels(ensemble, pool, config.threads);
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double sa = scores.at(pool[a].id);
            double sb = scores.at(pool[b].id);
            if (sa != sb) return sa < sb;
            return pool[a].id < pool[b].id;
        });
        std::vector<double> p_hat(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) {
            int base_label = predict(model, pool[i]);
            int agree = 0;
            for (std::size_t k = 0; k < matrix.rows[i].size(); ++k)
                agree += matrix.rows[i][k] == base_label;
            p_hat[i] = static_cast<double>(agree) / static_cast<double>(ensemble.size());
        }
        std::size_t machine_count = 0;
        double running = 0.0;
        for (std::size_t s = 1; s <= order.size(); ++s) {
            running += p_hat[order[s - 1]];
            if (running / static_cast<double>(s) >= stop.quality->threshold) machine_count = s;
        }
        for (std::size_t i = machine_count; i < order.size(); ++i)
            crowd_ids.push_back(pool[order[i]].id);
    }

    std::map<int, const Item*> pool_index;
    for (const auto& item : pool) pool_index[item.id] = &item;

    CrowdSession session(source, config, log);
    std::vector<Item> to_ask;
    for (int id : crowd_ids) to_ask.push_back(*pool_index.at(id));
    std::map<int, int> crowd_labels = session.ask(to_ask);
    for (auto& [id, label] : session.take_probe_labels())
        if (!crowd_labels.count(id)) crowd_labels[id] = label;

    IterationRecord record;
    record.iteration = 0;
    record.asked = crowd_ids;
    record.votes_used = log.votes;
    record.answers = crowd_labels;
    record.labeled_size = static_cast<int>(l0.size());
    record.unlabeled_size = static_cast<int>(pool.size());
    record.cv_estimate = nan_value();
    record.test_quality =
        pools.test.empty() ? nan_value() : model_quality_on(model, pools.test, config.metric);
    if (config.record_cv && static_cast<int>(l0.size()) >= 2) {
        int k = std::min<int>(config.quality_folds, static_cast<int>(l0.size()));
        if (k >= 2)
            record.cv_estimate =
                k_fold_quality(spec, l0, k, config.metric, hash64(seed, kTagCv, 0)).value;
    }
    log.iterations.push_back(std::move(record));

    // crowd labels never enter training in the upfront scenario
    for (const auto& item : pool) {
        auto c = crowd_labels.find(item.id);
        if (c != crowd_labels.end())
            log.final_labels[item.id] = {c->second, LabelSource::Crowd};
        else
            log.final_labels[item.id] = {predict(model, item), LabelSource::Model};
    }
    log.questions = static_cast<int>(crowd_labels.size());
    return log;
}

RunLog run_iterative(const PoolSplit& pools, const ClassifierSpec& spec, RankerKind ranker,
                     const StopRule& stop, int batch_size, AnswerSource& source,
                     const LoopConfig& config, std::uint64_t seed) {
    if (batch_size < 1) throw std::runtime_error("run_iterative: batch_size must be >= 1");
    if (pools.initial_labeled.empty()) throw std::runtime_error("run_iterative: empty L0");

    RunLog log;
    const LabeledSet& l0 = pools.initial_labeled;
    std::vector<Item> pool = pools.unlabeled;

    int budget = stop.budget ? *stop.budget : static_cast<int>(pool.size());
    if (budget > static_cast<int>(pool.size())) {
        log.warnings.push_back("budget " + std::to_string(budget) + " clamped to pool size " +
                               std::to_string(pool.size()));
        budget = static_cast<int>(pool.size());
    }

    LabeledSet labeled = l0;        // L0 u CL
    LabeledSet crowd_labeled;       // CL
    CrowdSession session(source, config, log);
    TrainedModel model = train(spec, labeled, hash64(seed, kTagBase, 0));

    for (int iteration = 0; log.questions < budget; ++iteration) {
        auto iter_tag = static_cast<std::uint64_t>(iteration);
        model = train(spec, labeled, hash64(seed, kTagBase, iter_tag));

        IterationRecord record;
        record.iteration = iteration;
        record.labeled_size = static_cast<int>(labeled.size());
        record.unlabeled_size = static_cast<int>(pool.size());
        record.cv_estimate = nan_value();
        record.test_quality = pools.test.empty()
                                  ? nan_value()
                                  : model_quality_on(model, pools.test, config.metric);

        // stopping check, once per iteration before selection
        if (config.record_cv || stop.quality) {
            int k = std::min<int>(config.quality_folds, static_cast<int>(labeled.size()));
            if (k >= 2)
                record.cv_estimate =
                    k_fold_quality(spec, labeled,
                                   k, stop.quality ? stop.quality->metric : config.metric,
                                   hash64(seed, kTagCv, iter_tag))
                        .value;
        }
        if (stop.quality && !std::isnan(record.cv_estimate) &&
            record.cv_estimate >= stop.quality->threshold) {
            log.iterations.push_back(std::move(record));
            break;
        }
        if (pool.empty()) {
            log.iterations.push_back(std::move(record));
            break;
        }

        Ensemble ensemble = train_ensemble(spec, labeled, config.ensemble_size,
                                           hash64(seed, kTagEnsemble, iter_tag), config.threads);
        ScoreVector scores = compute_scores(ranker, spec, labeled, model, ensemble, pool, config,
                                            hash64(seed, kTagScores, iter_tag));

        int want = std::min({batch_size, budget - log.questions, static_cast<int>(pool.size())});
        SelectionBatch batch = select_batch(scores, want, hash64(seed, kTagSelect, iter_tag));

        std::map<int, const Item*> pool_index;
        for (const auto& item : pool) pool_index[item.id] = &item;
        std::vector<Item> to_ask;
        for (int id : batch.item_ids) to_ask.push_back(*pool_index.at(id));

        int votes_before = log.votes;
        std::map<int, int> answers = session.ask(to_ask);
        for (auto& [id, label] : session.take_probe_labels())
            if (!answers.count(id)) answers[id] = label;

        std::set<int> already;
        for (const auto& ex : crowd_labeled) already.insert(ex.item.id);
        for (const auto& [id, label] : answers) {
            if (already.count(id)) {
                log.warnings.push_back("duplicate crowd answer for item " + std::to_string(id) +
                                       " ignored");
                continue;
            }
            crowd_labeled.push_back({*pool_index.at(id), label});
            labeled.push_back({*pool_index.at(id), label});
        }
        std::erase_if(pool, [&](const Item& item) { return answers.count(item.id) > 0; });

        record.asked = batch.item_ids;
        record.votes_used = log.votes - votes_before;
        record.answers = answers;
        log.questions += static_cast<int>(answers.size());
        log.iterations.push_back(std::move(record));
    }

    TrainedModel final_model = train(spec, labeled, hash64(seed, kTagFinal, 0));
    for (const auto& ex : crowd_labeled)
        log.final_labels[ex.item.id] = {ex.label, LabelSource::Crowd};
    for (const auto& item : pool)
        log.final_labels[item.id] = {predict(final_model, item), LabelSource::Model};
    return log;
}

ReplayAnswerSource::ReplayAnswerSource(const RunLog& log) {
    for (const auto& record : log.iterations)
        for (const auto& [id, label] : record.answers) answers_[id] = label;
}

VoteSet ReplayAnswerSource::request(const std::vector<AskedQuestion>& asks) {
    VoteSet votes;
    for (const auto& ask : asks) {
        auto a = answers_.find(ask.item_id);
        if (a == answers_.end())
            throw std::runtime_error("replay: no recorded answer for item " +
                                     std::to_string(ask.item_id));
        auto& out = votes.by_item[ask.item_id];
        for (int k = 0; k < ask.votes; ++k) out.push_back({k, a->second});
    }
    return votes;
}

namespace {

nlohmann::json record_to_json(const IterationRecord& r) {
    nlohmann::json j;
    j["iteration"] = r.iteration;
    j["asked"] = r.asked;
    j["votes_used"] = r.votes_used;
    nlohmann::json answers = nlohmann::json::object();
    for (const auto& [id, label] : r.answers) answers[std::to_string(id)] = label;
    j["answers"] = answers;
    if (!std::isnan(r.cv_estimate)) j["cv_estimate"] = r.cv_estimate;
    if (!std::isnan(r.test_quality)) j["test_quality"] = r.test_quality;
    j["labeled_size"] = r.labeled_size;
    j["unlabeled_size"] = r.unlabeled_size;
    return j;
}

IterationRecord record_from_json(const nlohmann::json& j) {
    IterationRecord r;
    r.iteration = j.at("iteration").get<int>();
    r.asked = j.at("asked").get<std::vector<int>>();
    r.votes_used = j.at("votes_used").get<int>();
    for (const auto& [key, value] : j.at("answers").items())
        r.answers[std::stoi(key)] = value.get<int>();
    r.cv_estimate = j.contains("cv_estimate") ? j.at("cv_estimate").get<double>() : nan_value();
    r.test_quality = j.contains("test_quality") ? j.at("test_quality").get<double>() : nan_value();
    r.labeled_size = j.at("labeled_size").get<int>();
    r.unlabeled_size = j.at("unlabeled_size").get<int>();
    return r;
}

}  // namespace

std::string RunLog::to_jsonl() const {
    std::ostringstream out;
    for (const auto& record : iterations) out << record_to_json(record).dump() << '\n';
    nlohmann::json tail;
    nlohmann::json finals = nlohmann::json::object();
    for (const auto& [id, fl] : final_labels)
        finals[std::to_string(id)] = {fl.label, fl.source == LabelSource::Crowd ? "crowd" : "model"};
    tail["final_labels"] = finals;
    tail["questions"] = questions;
    tail["votes"] = votes;
    tail["warnings"] = warnings;
    out << tail.dump() << '\n';
    return out.str();
}

RunLog RunLog::from_jsonl(const std::string& text) {
    RunLog log;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    if (lines.empty()) throw std::runtime_error("run log: empty");
    for (std::size_t i = 0; i + 1 < lines.size(); ++i)
        log.iterations.push_back(record_from_json(nlohmann::json::parse(lines[i])));
    auto tail = nlohmann::json::parse(lines.back());
    for (const auto& [key, value] : tail.at("final_labels").items()) {
        FinalLabel fl;
        fl.label = value.at(0).get<int>();
        fl.source = value.at(1).get<std::string>() == "crowd" ? LabelSource::Crowd
                                                              : LabelSource::Model;
        log.final_labels[std::stoi(key)] = fl;
    }
    log.questions = tail.at("questions").get<int>();
    log.votes = tail.at("votes").get<int>();
    log.warnings = tail.at("warnings").get<std::vector<std::string>>();
    return log;
}

}  // namespace crowdal
