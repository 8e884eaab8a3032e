#include "crowdal/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "crowdal/metrics.hpp"
#include "crowdal/rng.hpp"

namespace crowdal {

namespace {

TrainedModel constant_model(ClassifierKind kind, int label, std::size_t dim, int n) {
    TrainedModel m;
    m.kind = kind;
    m.training_size = n;
    if (kind == ClassifierKind::Linear) {
        m.weights.assign(dim, 0.0);
        m.bias = label == 1 ? 1.0 : -1.0;
    } else {
        TreeNode leaf;
        leaf.leaf_label = label;
        m.nodes.push_back(leaf);
    }
    return m;
}

TrainedModel train_linear(const ClassifierSpec& spec, const LabeledSet& labeled,
                          std::uint64_t seed) {
    const std::size_t n = labeled.size();
    const std::size_t dim = labeled.front().item.features.size();

    // standardize from the training set only; hinge SGD is scale-sensitive
    std::vector<double> mean(dim, 0.0);
    std::vector<double> scale(dim, 1.0);
    for (const auto& ex : labeled)
        for (std::size_t j = 0; j < dim; ++j) mean[j] += ex.item.features[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    for (std::size_t j = 0; j < dim; ++j) {
        double var = 0.0;
        for (const auto& ex : labeled) {
            double d = ex.item.features[j] - mean[j];
            var += d * d;
        }
        var /= static_cast<double>(n);
        scale[j] = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    long t = 0;
    const double eta0 = spec.learning_rate;
    const double lambda = spec.l2;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t idx : order) {
            const auto& ex = labeled[idx];
            double y = ex.label == 1 ? 1.0 : -1.0;
            double eta = eta0 / (1.0 + eta0 * lambda * static_cast<double>(t));
            ++t;
            double margin = b;
            for (std::size_t j = 0; j < dim; ++j)
                margin += w[j] * (ex.item.features[j] - mean[j]) / scale[j];
            double shrink = 1.0 - eta * lambda;
            for (auto& wj : w) wj *= shrink;
            if (y * margin < 1.0) {
                for (std::size_t j = 0; j < dim; ++j)
                    w[j] += eta * y * (ex.item.features[j] - mean[j]) / scale[j];
                b += eta * y;
            }
        }
    }

    // fold standardization into raw-space weights: w'.x + b' == w.z + b
    TrainedModel model;
    model.kind = ClassifierKind::Linear;
    model.training_size = static_cast<int>(n);
    model.weights.assign(dim, 0.0);
    model.bias = b;
    for (std::size_t j = 0; j < dim; ++j) {
        model.weights[j] = w[j] / scale[j];
        model.bias -= w[j] * mean[j] / scale[j];
    }
    return model;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
};

double gini(int ones, int total) {
    if (total == 0) return 0.0;
    double p = static_cast<double>(ones) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

int majority_label(const std::vector<std::size_t>& rows, const LabeledSet& labeled) {
    int ones = 0;
    for (auto r : rows) ones += labeled[r].label;
    int zeros = static_cast<int>(rows.size()) - ones;
    // equal counts resolve to the lower class id
    return ones > zeros ? 1 : 0;
}

// weighted child Gini; candidate thresholds at midpoints of consecutive
// distinct values, ties broken by lowest feature index then lowest threshold
SplitChoice best_split(const std::vector<std::size_t>& rows, const LabeledSet& labeled) {
    SplitChoice best;
    const std::size_t dim = labeled.front().item.features.size();
    const int total = static_cast<int>(rows.size());
    std::vector<std::pair<double, int>> column(rows.size());
    for (std::size_t f = 0; f < dim; ++f) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            column[i] = {labeled[rows[i]].item.features[f], labeled[rows[i]].label};
        std::sort(column.begin(), column.end());
        int left_ones = 0;
        int total_ones = 0;
        for (const auto& [x, y] : column) total_ones += y;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            left_ones += column[i].second;
            if (column[i].first == column[i + 1].first) continue;
            double thr = 0.5 * (column[i].first + column[i + 1].first);
            int nl = static_cast<int>(i) + 1;
            int nr = total - nl;
            double imp = (static_cast<double>(nl) * gini(left_ones, nl) +
                          static_cast<double>(nr) * gini(total_ones - left_ones, nr)) /
                         static_cast<double>(total);
            // strict improvement only: the ascending (feature, threshold) scan
            // makes the first optimum the tie-break winner
            if (imp < best.impurity) best = {static_cast<int>(f), thr, imp};
        }
    }
    return best;
}

int build_tree(std::vector<TreeNode>& nodes, const std::vector<std::size_t>& rows,
               const LabeledSet& labeled, const ClassifierSpec& spec, int depth) {
    int ones = 0;
    for (auto r : rows) ones += labeled[r].label;
    const bool pure = ones == 0 || ones == static_cast<int>(rows.size());
    const bool depth_capped = spec.max_depth > 0 && depth >= spec.max_depth;
    const bool too_small = static_cast<int>(rows.size()) < std::max(2, spec.min_parent);

    auto make_leaf = [&]() {
        TreeNode leaf;
        leaf.leaf_label = majority_label(rows, labeled);
        nodes.push_back(leaf);
        return static_cast<int>(nodes.size()) - 1;
    };

    if (pure || depth_capped || too_small) return make_leaf();

    SplitChoice split = best_split(rows, labeled);
    if (split.feature < 0) return make_leaf();  // all feature values identical

    std::vector<std::size_t> left_rows;
    std::vector<std::size_t> right_rows;
    for (auto r : rows) {
        if (labeled[r].item.features[static_cast<std::size_t>(split.feature)] < split.threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }

    int self = static_cast<int>(nodes.size());
    nodes.emplace_back();
    nodes[static_cast<std::size_t>(self)].feature = split.feature;
    nodes[static_cast<std::size_t>(self)].threshold = split.threshold;
    int left = build_tree(nodes, left_rows, labeled, spec, depth + 1);
    int right = build_tree(nodes, right_rows, labeled, spec, depth + 1);
    nodes[static_cast<std::size_t>(self)].left = left;
    nodes[static_cast<std::size_t>(self)].right = right;
    return self;
}

TrainedModel train_tree(const ClassifierSpec& spec, const LabeledSet& labeled) {
    TrainedModel model;
    model.kind = ClassifierKind::Tree;
    model.training_size = static_cast<int>(labeled.size());
    std::vector<std::size_t> rows(labeled.size());
    std::iota(rows.begin(), rows.end(), 0);
    build_tree(model.nodes, rows, labeled, spec, 0);
    return model;
}

}  // namespace

TrainedModel train(const ClassifierSpec& spec, const LabeledSet& labeled, std::uint64_t seed) {
    if (labeled.empty()) throw std::runtime_error("train: empty training set");
    if (labeled.front().item.features.empty())
        throw std::runtime_error("train: zero-dimensional features");

    bool has0 = false;
    bool has1 = false;
    for (const auto& ex : labeled) {
        has0 |= ex.label == 0;
        has1 |= ex.label == 1;
    }
    if (!has0 || !has1)
        return constant_model(spec.kind, has1 ? 1 : 0, labeled.front().item.features.size(),
                              static_cast<int>(labeled.size()));

    if (spec.kind == ClassifierKind::Linear) return train_linear(spec, labeled, seed);
    return train_tree(spec, labeled);
}

int predict(const TrainedModel& model, const Item& item) {
    if (model.kind == ClassifierKind::Linear) {
        // ties (value exactly 0) resolve to class 1
        return decision_value(model, item) >= 0.0 ? 1 : 0;
    }
    int node = 0;  // root is the tree's first node
    while (model.nodes[static_cast<std::size_t>(node)].feature >= 0) {
        const auto& nd = model.nodes[static_cast<std::size_t>(node)];
        if (static_cast<std::size_t>(nd.feature) >= item.features.size())
            throw std::runtime_error("predict: feature dimension mismatch");
        node = item.features[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left
                                                                                  : nd.right;
    }
    return model.nodes[static_cast<std::size_t>(node)].leaf_label;
}

double decision_value(const TrainedModel& model, const Item& item) {
    if (model.kind != ClassifierKind::Linear)
        throw std::runtime_error("decision_value: unsupported for tree models");
    if (item.features.size() != model.weights.size())
        throw std::runtime_error("decision_value: feature dimension mismatch");
    double v = model.bias;
    for (std::size_t j = 0; j < model.weights.size(); ++j)
        v += model.weights[j] * item.features[j];
    return v;
}

QualityEstimate k_fold_quality(const ClassifierSpec& spec, const LabeledSet& labeled, int k,
                               Metric metric, std::uint64_t seed) {
    if (k < 2) throw std::runtime_error("k_fold_quality: k must be >= 2");
    if (static_cast<int>(labeled.size()) < k)
        throw std::runtime_error("k_fold_quality: fewer examples than folds");

    // canonical id-sorted ordering, then a seeded shuffle defines the folds
    std::vector<std::size_t> order(labeled.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return labeled[a].item.id < labeled[b].item.id;
    });
    Rng rng(hash64(seed, 0x6b666f6c64ULL));
    rng.shuffle(order);

    double total = 0.0;
    for (int fold = 0; fold < k; ++fold) {
        LabeledSet train_part;
        std::vector<int> gold;
        std::vector<int> predicted;
        LabeledSet test_part;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (static_cast<int>(i % static_cast<std::size_t>(k)) == fold)
                test_part.push_back(labeled[order[i]]);
            else
                train_part.push_back(labeled[order[i]]);
        }
        TrainedModel model = train(spec, train_part, hash64(seed, static_cast<std::uint64_t>(fold)));
        for (const auto& ex : test_part) {
            predicted.push_back(predict(model, ex.item));
            gold.push_back(ex.label);
        }
        total += quality(metric, predicted, gold);
    }

    QualityEstimate est;
    est.metric = metric;
    est.value = total / static_cast<double>(k);
    est.folds = k;
    return est;
}

Metric metric_from_string(const std::string& name) {
    if (name == "accuracy") return Metric::Accuracy;
    if (name == "f1") return Metric::F1;
    throw std::runtime_error("unknown metric '" + name + "'");
}

std::string metric_to_string(Metric metric) {
    return metric == Metric::Accuracy ? "accuracy" : "f1";
}

}  // namespace crowdal
