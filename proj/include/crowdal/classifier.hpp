#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "crowdal/dataset.hpp"

namespace crowdal {

enum class ClassifierKind { Linear, Tree };

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::Linear;
    // linear
    double learning_rate = 0.5;
    int epochs = 25;
    double l2 = 1e-3;
    // tree
    int min_parent = 1;  // impure nodes with >= min_parent observations split
    int max_depth = 0;   // 0: unlimited

    static ClassifierSpec linear() { return {}; }
    static ClassifierSpec tree() {
        ClassifierSpec s;
        s.kind = ClassifierKind::Tree;
        return s;
    }
};

struct TreeNode {
    int feature = -1;      // -1: leaf
    double threshold = 0.0;
    int left = -1;         // x[feature] < threshold
    int right = -1;
    int leaf_label = -1;
};

struct TrainedModel {
    ClassifierKind kind = ClassifierKind::Linear;
    // linear payload, expressed over raw (unstandardized) features
    std::vector<double> weights;
    double bias = 0.0;
    // tree payload; node 0 is the root
    std::vector<TreeNode> nodes;
    int training_size = 0;
};

enum class Metric { Accuracy, F1 };

struct QualityEstimate {
    Metric metric = Metric::Accuracy;
    double value = 0.0;
    int folds = 0;
};

TrainedModel train(const ClassifierSpec& spec, const LabeledSet& labeled, std::uint64_t seed);

int predict(const TrainedModel& model, const Item& item);

// w.x + bias; linear models only
double decision_value(const TrainedModel& model, const Item& item);

// Mean per-fold metric over a seeded k-way partition. The partition is
// computed on the id-sorted ordering, so it is invariant to input order.
QualityEstimate k_fold_quality(const ClassifierSpec& spec, const LabeledSet& labeled, int k,
                               Metric metric, std::uint64_t seed);

Metric metric_from_string(const std::string& name);
std::string metric_to_string(Metric metric);

}  // namespace crowdal
