#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crowdal/classifier.hpp"
#include "crowdal/crowd.hpp"
#include "crowdal/dataset.hpp"
#include "crowdal/loops.hpp"
#include "crowdal/metrics.hpp"
#include "crowdal/rankers.hpp"

namespace crowdal {

struct DatasetSource {
    std::string path;             // CSV input when non-empty
    std::string label_column = "label";
    std::string subgroup_column;  // empty: hash-bucket into `subgroups`
    int subgroups = 1;
    std::string synthetic;        // separable | overlap | imbalanced
    int synthetic_n = 200;
    std::string binarize = "majority-vs-rest";  // or "explicit"
    std::vector<std::string> positive_classes;
};

struct ExperimentConfig {
    int schema_version = 1;
    DatasetSource dataset;
    ClassifierSpec classifier;
    std::string scenario = "iterative";  // or "upfront"
    std::vector<RankerKind> rankers;
    std::vector<double> budgets;  // fractions of |U|, each in (0,1]
    int batch_size = 0;           // 0: default 10%-of-budget rule
    std::string answer_kind = "gold";  // gold | simulated | file-queue
    WorkerModel worker;                // simulated crowd parameters
    double default_accuracy = 0.0;     // fills subgroup_accuracy when > 0
    std::string questions_file;        // file-queue paths
    std::string answers_file;
    std::optional<PBAConfig> pba;
    int repetitions = 1;
    std::uint64_t master_seed = 0;
    double initial_fraction = 0.03;
    double test_fraction = 0.0;
    std::optional<double> quality_target;
    LoopConfig loop;
    std::string output_dir = "out";

    void validate() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const ExperimentConfig& config);

// FNV-1a of the canonical JSON dump; recorded in every output file header
std::string config_hash(const ExperimentConfig& config);

struct CellResult {
    RankerKind ranker = RankerKind::Baseline;
    int budget_index = 0;
    double budget_fraction = 0.0;
    int repetition = 0;
    bool failed = false;
    std::string error;
    int questions = 0;
    double overall_quality = 0.0;
    double crowd_quality = 0.0;  // accuracy of crowd labels on asked items
    double model_quality = 0.0;  // metric on model-labeled items
    RunLog log;
};

struct ResultStore {
    std::string directory;  // empty when not persisted
    std::string hash;
    ExperimentConfig config;
    std::vector<CellResult> cells;

    LearningCurve summary_curve(RankerKind ranker) const;
    bool complete() const;
};

Dataset load_experiment_dataset(const ExperimentConfig& config);

// Executes the (ranker x budget x repetition) grid; cell failures are
// recorded and the rest of the grid proceeds. Persists config, run logs,
// summary curves and a grid summary under a content-addressed run directory
// (config hash + timestamp) inside config.output_dir, unless output_dir is
// empty.
ResultStore run_experiment(const ExperimentConfig& config);

// reloads a persisted store; every metric is recomputed from the run logs
ResultStore load_store(const std::string& run_directory);

// per-pair comparison report (report.json) plus plot-data CSVs per curve;
// pairs are (baseline, method) by ranker name
void emit_report(const ResultStore& store,
                 const std::vector<std::pair<std::string, std::string>>& pairs,
                 const std::string& directory);

}  // namespace crowdal
