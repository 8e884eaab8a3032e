#include "crowdal/synth.hpp"

#include <fstream>
#include <stdexcept>

#include "crowdal/rng.hpp"

namespace crowdal {

SynthKind synth_from_string(const std::string& name) {
    if (name == "separable") return SynthKind::Separable;
    if (name == "overlap") return SynthKind::Overlap;
    if (name == "imbalanced") return SynthKind::Imbalanced;
    throw std::runtime_error("unknown synthetic dataset kind '" + name + "'");
}

Dataset generate_synthetic(SynthKind kind, int n, std::uint64_t seed) {
    if (n < 4) throw std::runtime_error("generate_synthetic: need at least 4 items");

    double separation = 0.0;
    double positive_fraction = 0.5;
    switch (kind) {
        case SynthKind::Separable: separation = 4.0; break;
        case SynthKind::Overlap: separation = 1.2; break;
        case SynthKind::Imbalanced:
            separation = 3.0;
            positive_fraction = 0.1;
            break;
    }

    Dataset ds;
    ds.dimension = 2;
    ds.class_names = {"0", "1"};
    auto n_positive = std::max(2, static_cast<int>(positive_fraction * n));
    for (int i = 0; i < n; ++i) {
        Rng rng(hash64(seed, static_cast<std::uint64_t>(i)));
        Item item;
        item.id = i;
        int label = i < n_positive ? 1 : 0;
        double cx = label == 1 ? separation / 2.0 : -separation / 2.0;
        item.features = {cx + rng.normal(), rng.normal()};
        item.gold_label = label;
        item.subgroup = 0;
        ds.items.push_back(std::move(item));
    }
    return ds;
}

void write_dataset_csv(const Dataset& dataset, const std::string& path,
                       const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset to " + path);
    for (std::size_t j = 0; j < dataset.dimension; ++j) out << 'x' << j << ',';
    out << label_column << '\n';
    out.precision(17);
    for (const auto& item : dataset.items) {
        for (double v : item.features) out << v << ',';
        out << dataset.class_names[static_cast<std::size_t>(item.gold_label.value())] << '\n';
    }
}

}  // namespace crowdal
