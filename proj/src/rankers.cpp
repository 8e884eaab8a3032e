#include "crowdal/rankers.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "crowdal/rng.hpp"

namespace crowdal {

RankerKind ranker_from_string(const std::string& name) {
    if (name == "uncertainty") return RankerKind::Uncertainty;
    if (name == "minexperror") return RankerKind::MinExpError;
    if (name == "margindistance") return RankerKind::MarginDistance;
    if (name == "baseline") return RankerKind::Baseline;
    throw std::runtime_error("unknown ranker '" + name + "'");
}

std::string ranker_to_string(RankerKind kind) {
    switch (kind) {
        case RankerKind::Uncertainty: return "uncertainty";
        case RankerKind::MinExpError: return "minexperror";
        case RankerKind::MarginDistance: return "margindistance";
        case RankerKind::Baseline: return "baseline";
    }
    return "unknown";
}

double ScoreVector::at(int item_id) const {
    auto pos = std::lower_bound(entries.begin(), entries.end(), item_id,
                                [](const auto& e, int id) { return e.first < id; });
    if (pos == entries.end() || pos->first != item_id)
        throw std::runtime_error("ScoreVector: unknown item id " + std::to_string(item_id));
    return pos->second;
}

double ScoreVector::sum() const {
    double s = 0.0;
    for (const auto& [id, w] : entries) s += w;
    return s;
}

namespace {

ScoreVector make_sorted(RankerKind kind, std::vector<std::pair<int, double>> entries) {
    std::sort(entries.begin(), entries.end());
    ScoreVector sv;
    sv.ranker_kind = kind;
    sv.entries = std::move(entries);
    return sv;
}

}  // namespace

ScoreVector uncertainty_scores(const LabelMatrix& label_matrix) {
    if (label_matrix.rows.empty()) throw std::runtime_error("uncertainty_scores: empty matrix");
    std::vector<std::pair<int, double>> entries;
    entries.reserve(label_matrix.rows.size());
    for (std::size_t u = 0; u < label_matrix.rows.size(); ++u) {
        double r = label_matrix.row_mean(u);
        entries.emplace_back(label_matrix.item_ids[u], r * (1.0 - r));
    }
    return make_sorted(RankerKind::Uncertainty, std::move(entries));
}

ScoreVector min_exp_error_scores(const ClassifierSpec& spec, const LabeledSet& labeled,
                                 const Ensemble& ensemble, const std::vector<Item>& unlabeled,
                                 int cv_folds, std::uint64_t seed, double smoothing_c,
                                 unsigned threads) {
    if (cv_folds < 1) throw std::runtime_error("min_exp_error_scores: cv_folds must be >= 1");
    if (static_cast<int>(labeled.size()) < cv_folds)
        throw std::runtime_error("min_exp_error_scores: fewer labeled examples than cv folds");
    if (unlabeled.empty()) throw std::runtime_error("min_exp_error_scores: empty pool");

    TrainedModel base = train(spec, labeled, hash64(seed, 0xba5eULL));

    // one fold partition per call, on the canonical id-sorted ordering
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return labeled[a].item.id < labeled[b].item.id;
    });
    Rng fold_rng(hash64(seed, 0xf01d5ULL));
    fold_rng.shuffle(order);
    std::vector<int> fold_of(labeled.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        fold_of[order[i]] = static_cast<int>(i % static_cast<std::size_t>(cv_folds));

    std::vector<std::pair<int, double>> entries(unlabeled.size());
    std::exception_ptr failure;
    std::mutex failure_mutex;
    parallel_for(unlabeled.size(), threads, [&](std::size_t u) {
        try {
            const Item& item = unlabeled[u];
            int predicted = predict(base, item);

            int agree = 0;
            for (const auto& member : ensemble.members)
                agree += predict(member, item) == predicted;
            double p_hat = static_cast<double>(agree) / static_cast<double>(ensemble.size());

            double err[2] = {0.0, 0.0};  // [0]: assumed right, [1]: flipped
            for (int which = 0; which < 2; ++which) {
                int assumed = which == 0 ? predicted : 1 - predicted;
                double fold_error_sum = 0.0;
                for (int fold = 0; fold < cv_folds; ++fold) {
                    LabeledSet train_part;
                    train_part.reserve(labeled.size());
                    for (std::size_t i = 0; i < labeled.size(); ++i)
                        if (fold_of[i] != fold) train_part.push_back(labeled[i]);
                    train_part.push_back({item, assumed});
                    TrainedModel candidate =
                        train(spec, train_part,
                              hash64(seed, static_cast<std::uint64_t>(item.id) * 2 +
                                               static_cast<std::uint64_t>(which),
                                     static_cast<std::uint64_t>(fold)));
                    int wrong = 0;
                    int count = 0;
                    for (std::size_t i = 0; i < labeled.size(); ++i) {
                        if (fold_of[i] != fold) continue;
                        wrong += predict(candidate, labeled[i].item) != labeled[i].label;
                        ++count;
                    }
                    fold_error_sum +=
                        count > 0 ? static_cast<double>(wrong) / static_cast<double>(count) : 0.0;
                }
                err[which] = fold_error_sum / static_cast<double>(cv_folds);
            }

            double min_exp_error = p_hat * err[0] + (1.0 - p_hat) * err[1];
            entries[u] = {item.id, (1.0 - min_exp_error) + smoothing_c};
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);

    double total = 0.0;
    for (const auto& [id, w] : entries) total += w;
    if (total <= 0.0) throw std::runtime_error("min_exp_error_scores: non-positive score mass");
    for (auto& [id, w] : entries) w /= total;
    return make_sorted(RankerKind::MinExpError, std::move(entries));
}

ScoreVector margin_distance_scores(const TrainedModel& model,
                                   const std::vector<Item>& unlabeled) {
    if (model.kind != ClassifierKind::Linear)
        throw std::runtime_error("margin_distance_scores: linear models only");
    std::vector<std::pair<int, double>> entries;
    entries.reserve(unlabeled.size());
    for (const auto& item : unlabeled)
        entries.emplace_back(item.id, 1.0 / (1.0 + std::abs(decision_value(model, item))));
    return make_sorted(RankerKind::MarginDistance, std::move(entries));
}

ScoreVector baseline_scores(const std::vector<Item>& unlabeled) {
    if (unlabeled.empty()) throw std::runtime_error("baseline_scores: empty pool");
    std::vector<std::pair<int, double>> entries;
    entries.reserve(unlabeled.size());
    double w = 1.0 / static_cast<double>(unlabeled.size());
    for (const auto& item : unlabeled) entries.emplace_back(item.id, w);
    return make_sorted(RankerKind::Baseline, std::move(entries));
}

SelectionBatch select_batch(const ScoreVector& scores, int batch_size, std::uint64_t seed) {
    if (batch_size < 1) throw std::runtime_error("select_batch: batch_size must be >= 1");
    if (scores.entries.empty()) throw std::runtime_error("select_batch: empty pool");

    std::vector<std::pair<int, double>> remaining = scores.entries;
    Rng rng(seed);
    SelectionBatch batch;
    batch.seed = seed;
    std::size_t draws = std::min<std::size_t>(static_cast<std::size_t>(batch_size),
                                              remaining.size());
    for (std::size_t d = 0; d < draws; ++d) {
        double total = 0.0;
        for (const auto& [id, w] : remaining) total += w;
        std::size_t chosen;
        if (total <= 0.0) {
            chosen = rng.index(remaining.size());
        } else {
            double r = rng.unit() * total;
            double acc = 0.0;
            chosen = remaining.size() - 1;
            for (std::size_t i = 0; i < remaining.size(); ++i) {
                acc += remaining[i].second;
                if (r < acc) {
                    chosen = i;
                    break;
                }
            }
        }
        batch.item_ids.push_back(remaining[chosen].first);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
    return batch;
}

}  // namespace crowdal
