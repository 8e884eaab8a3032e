#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdal {

using FeatureVector = std::vector<double>;

struct Item {
    int id = -1;
    FeatureVector features;
    std::optional<int> gold_label;  // binary after binarize_labels
    int subgroup = 0;
};

struct LabeledExample {
    Item item;
    int label = 0;
};

using LabeledSet = std::vector<LabeledExample>;

struct Dataset {
    std::vector<Item> items;
    std::size_t dimension = 0;
    // raw class names in first-seen order; item gold labels index into this
    // until binarize_labels collapses them to {0, 1}
    std::vector<std::string> class_names;

    std::map<std::string, int> class_histogram() const;
};

struct PoolSplit {
    LabeledSet initial_labeled;   // L0
    std::vector<Item> unlabeled;  // U (gold retained for the oracle side)
    LabeledSet test;
};

struct CsvSchema {
    std::string label_column;
    std::string subgroup_column;  // empty: hash-bucket ids into `subgroups`
    int subgroups = 1;
};

class parse_error : public std::runtime_error {
public:
    parse_error(const std::string& msg, int line)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

Dataset parse_dataset(const std::string& path, const CsvSchema& schema);

enum class BinarizePolicy { MajorityVsRest, ExplicitPartition };

// MajorityVsRest: most frequent raw class -> 1, everything else -> 0.
// ExplicitPartition: classes listed in `positive_classes` -> 1; the partition
// must cover every raw class (listed classes are 1, the rest 0; unknown names
// are an error).
Dataset binarize_labels(const Dataset& dataset, BinarizePolicy policy,
                        const std::vector<std::string>& positive_classes = {});

// Deterministic given seed; redraws the initial pool (at most 100 times)
// until it contains both classes.
PoolSplit split_pools(const Dataset& dataset, double initial_fraction,
                      double test_fraction, std::uint64_t seed);

int hash_subgroup(int item_id, int subgroups);

}  // namespace crowdal
