#include "crowdal/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "crowdal/rng.hpp"

namespace crowdal {

std::map<std::string, int> Dataset::class_histogram() const {
    std::map<std::string, int> hist;
    for (const auto& it : items) {
        if (it.gold_label) hist[class_names[static_cast<std::size_t>(*it.gold_label)]]++;
    }
    return hist;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

int hash_subgroup(int item_id, int subgroups) {
    if (subgroups <= 1) return 0;
    return static_cast<int>(mix64(static_cast<std::uint64_t>(item_id)) %
                            static_cast<std::uint64_t>(subgroups));
}

Dataset parse_dataset(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string header;
    if (!std::getline(in, header)) throw parse_error("empty file: " + path, 1);

    auto columns = split_csv_line(header);
    for (auto& c : columns) c = trim(c);

    int label_col = -1;
    int subgroup_col = -1;
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == schema.label_column) label_col = static_cast<int>(i);
        if (!schema.subgroup_column.empty() && columns[i] == schema.subgroup_column)
            subgroup_col = static_cast<int>(i);
    }
    if (label_col < 0)
        throw parse_error("label column '" + schema.label_column + "' not found in header", 1);
    if (!schema.subgroup_column.empty() && subgroup_col < 0)
        throw parse_error("subgroup column '" + schema.subgroup_column + "' not found in header",
                          1);

    Dataset ds;
    std::map<std::string, int> class_ids;
    std::string line;
    int line_no = 1;
    int next_id = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != columns.size())
            throw parse_error("expected " + std::to_string(columns.size()) + " fields, got " +
                                  std::to_string(fields.size()),
                              line_no);
        Item item;
        item.id = next_id++;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto value = trim(fields[i]);
            if (static_cast<int>(i) == label_col) {
                auto [pos, inserted] =
                    class_ids.try_emplace(value, static_cast<int>(ds.class_names.size()));
                if (inserted) ds.class_names.push_back(value);
                item.gold_label = pos->second;
            } else if (static_cast<int>(i) == subgroup_col) {
                try {
                    item.subgroup = std::stoi(value);
                } catch (const std::exception&) {
                    throw parse_error("non-integer subgroup value '" + value + "'", line_no);
                }
            } else {
                std::size_t consumed = 0;
                double x = 0.0;
                try {
                    x = std::stod(value, &consumed);
                } catch (const std::exception&) {
                    throw parse_error("non-numeric feature value '" + value + "'", line_no);
                }
                if (consumed != value.size() || !std::isfinite(x))
                    throw parse_error("non-numeric feature value '" + value + "'", line_no);
                item.features.push_back(x);
            }
        }
        if (ds.items.empty()) {
            ds.dimension = item.features.size();
        } else if (item.features.size() != ds.dimension) {
            throw parse_error("inconsistent feature count", line_no);
        }
        ds.items.push_back(std::move(item));
    }
    if (ds.items.empty()) throw parse_error("no data rows in " + path, line_no);
    if (ds.dimension == 0) throw parse_error("no feature columns in " + path, 1);

    if (schema.subgroup_column.empty()) {
        for (auto& item : ds.items) item.subgroup = hash_subgroup(item.id, schema.subgroups);
    }
    return ds;
}

Dataset binarize_labels(const Dataset& dataset, BinarizePolicy policy,
                        const std::vector<std::string>& positive_classes) {
    if (dataset.class_names.size() < 2)
        throw std::runtime_error("binarize_labels requires at least 2 raw classes");

    // already-binarized datasets have nothing left to decide; re-applying
    // either policy is a no-op
    if (dataset.class_names == std::vector<std::string>{"0", "1"}) return dataset;

    std::vector<bool> positive(dataset.class_names.size(), false);
    if (policy == BinarizePolicy::MajorityVsRest) {
        auto hist = dataset.class_histogram();
        int best = -1;
        int best_count = -1;
        for (std::size_t c = 0; c < dataset.class_names.size(); ++c) {
            int count = hist.count(dataset.class_names[c]) ? hist.at(dataset.class_names[c]) : 0;
            if (count > best_count) {
                best_count = count;
                best = static_cast<int>(c);
            }
        }
        positive[static_cast<std::size_t>(best)] = true;
    } else {
        for (const auto& name : positive_classes) {
            auto pos = std::find(dataset.class_names.begin(), dataset.class_names.end(), name);
            if (pos == dataset.class_names.end())
                throw std::runtime_error("explicit partition names unknown class '" + name + "'");
            positive[static_cast<std::size_t>(pos - dataset.class_names.begin())] = true;
        }
        bool any_negative = false;
        for (bool p : positive) any_negative |= !p;
        if (positive_classes.empty() || !any_negative)
            throw std::runtime_error("explicit partition must split classes into two nonempty sides");
    }

    Dataset out = dataset;
    out.class_names = {"0", "1"};
    for (auto& item : out.items) {
        if (!item.gold_label) continue;
        item.gold_label = positive[static_cast<std::size_t>(*item.gold_label)] ? 1 : 0;
    }
    return out;
}

PoolSplit split_pools(const Dataset& dataset, double initial_fraction, double test_fraction,
                      std::uint64_t seed) {
    if (initial_fraction <= 0.0 || initial_fraction >= 1.0)
        throw std::runtime_error("initial_fraction must be in (0,1)");
    if (test_fraction < 0.0 || initial_fraction + test_fraction >= 1.0)
        throw std::runtime_error("initial and test fractions must sum to < 1");
    for (const auto& item : dataset.items)
        if (!item.gold_label) throw std::runtime_error("split_pools requires gold labels");

    const std::size_t n = dataset.items.size();
    auto n_initial = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(
                                                  initial_fraction * static_cast<double>(n))));
    auto n_test = static_cast<std::size_t>(std::lround(test_fraction * static_cast<double>(n)));
    if (n_initial + n_test >= n) throw std::runtime_error("pools leave no unlabeled items");

    for (int attempt = 0; attempt < 100; ++attempt) {
        Rng rng(hash64(seed, static_cast<std::uint64_t>(attempt)));
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        bool has0 = false;
        bool has1 = false;
        for (std::size_t i = 0; i < n_initial; ++i) {
            int label = *dataset.items[order[i]].gold_label;
            has0 |= label == 0;
            has1 |= label == 1;
        }
        if (!has0 || !has1) continue;

        PoolSplit split;
        for (std::size_t i = 0; i < n; ++i) {
            const Item& item = dataset.items[order[i]];
            if (i < n_initial) {
                split.initial_labeled.push_back({item, *item.gold_label});
            } else if (i < n_initial + n_test) {
                split.test.push_back({item, *item.gold_label});
            } else {
                split.unlabeled.push_back(item);
            }
        }
        auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
        auto by_item_id = [](const auto& a, const auto& b) { return a.item.id < b.item.id; };
        std::sort(split.initial_labeled.begin(), split.initial_labeled.end(), by_item_id);
        std::sort(split.test.begin(), split.test.end(), by_item_id);
        std::sort(split.unlabeled.begin(), split.unlabeled.end(), by_id);
        return split;
    }
    throw std::runtime_error(
        "could not draw an initial pool containing both classes after 100 retries");
}

}  // namespace crowdal
