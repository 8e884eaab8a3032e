#pragma once

#include <cstdint>
#include <vector>

#include "crowdal/classifier.hpp"
#include "crowdal/dataset.hpp"

namespace crowdal {

struct Ensemble {
    std::vector<TrainedModel> members;
    int source_size = 0;  // size of the labeled pool each replicate was drawn from

    int size() const { return static_cast<int>(members.size()); }
};

// row per unlabeled item, column per ensemble member, entries in {0,1}
struct LabelMatrix {
    std::vector<int> item_ids;
    std::vector<std::vector<int>> rows;

    double row_mean(std::size_t row) const;
};

// n uniform draws with replacement from an n-item pool
LabeledSet resample(const LabeledSet& labeled, std::uint64_t seed);

// Member k trains on resample(labeled, hash64(master_seed, k)). Members are
// independent, so execution order (or worker count) cannot change the result.
Ensemble train_ensemble(const ClassifierSpec& spec, const LabeledSet& labeled, int m,
                        std::uint64_t master_seed, unsigned threads = 1);

LabelMatrix ensemble_labels(const Ensemble& ensemble, const std::vector<Item>& unlabeled,
                            unsigned threads = 1);

}  // namespace crowdal
