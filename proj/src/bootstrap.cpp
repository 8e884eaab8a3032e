#include "crowdal/bootstrap.hpp"

#include <mutex>
#include <stdexcept>

#include "crowdal/rng.hpp"

namespace crowdal {

double LabelMatrix::row_mean(std::size_t row) const {
    const auto& r = rows[row];
    int ones = 0;
    for (int v : r) ones += v;
    return static_cast<double>(ones) / static_cast<double>(r.size());
}

LabeledSet resample(const LabeledSet& labeled, std::uint64_t seed) {
    if (labeled.empty()) throw std::runtime_error("resample: empty pool");
    Rng rng(seed);
    LabeledSet replicate;
    replicate.reserve(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i)
        replicate.push_back(labeled[rng.index(labeled.size())]);
    return replicate;
}

Ensemble train_ensemble(const ClassifierSpec& spec, const LabeledSet& labeled, int m,
                        std::uint64_t master_seed, unsigned threads) {
    if (m < 2) throw std::runtime_error("train_ensemble: m must be >= 2");
    Ensemble ensemble;
    ensemble.source_size = static_cast<int>(labeled.size());
    ensemble.members.resize(static_cast<std::size_t>(m));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    parallel_for(static_cast<std::size_t>(m), threads, [&](std::size_t k) {
        try {
            std::uint64_t seed_k = hash64(master_seed, static_cast<std::uint64_t>(k));
            // single-class replicates are kept and trained as constant
            // classifiers; redrawing would bias the bootstrap distribution
            ensemble.members[k] = train(spec, resample(labeled, seed_k), hash64(seed_k, 1));
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return ensemble;
}

LabelMatrix ensemble_labels(const Ensemble& ensemble, const std::vector<Item>& unlabeled,
                            unsigned threads) {
    LabelMatrix matrix;
    matrix.item_ids.reserve(unlabeled.size());
    for (const auto& item : unlabeled) matrix.item_ids.push_back(item.id);
    matrix.rows.assign(unlabeled.size(),
                       std::vector<int>(static_cast<std::size_t>(ensemble.size()), 0));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    parallel_for(unlabeled.size(), threads, [&](std::size_t u) {
        try {
            for (std::size_t k = 0; k < ensemble.members.size(); ++k)
                matrix.rows[u][k] = predict(ensemble.members[k], unlabeled[u]);
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    });
    if (failure) std::rethrow_exception(failure);
    return matrix;
}

}  // namespace crowdal
