#pragma once

#include <cstdint>
#include <string>

#include "crowdal/dataset.hpp"

namespace crowdal {

enum class SynthKind { Separable, Overlap, Imbalanced };

SynthKind synth_from_string(const std::string& name);

// Bundled 2D Gaussian-pair generators, one per SynthKind:
//   separable:  well-separated class means, balanced
//   overlap:    means close enough that classes mix, balanced
//   imbalanced: separable pair at a 9:1 class ratio
Dataset generate_synthetic(SynthKind kind, int n, std::uint64_t seed);

void write_dataset_csv(const Dataset& dataset, const std::string& path,
                       const std::string& label_column = "label");

}  // namespace crowdal
