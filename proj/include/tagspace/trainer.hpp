#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tagspace/corpus.hpp"
#include "tagspace/embeddings.hpp"
#include "tagspace/losses.hpp"
#include "tagspace/model.hpp"
#include "tagspace/sampler.hpp"

namespace tagspace {

struct TrainConfig {
    int epochs = 40;
    int batch_size = 32;
    LossConfig loss;
    SamplerConfig sampler;
    OptimizerConfig optimizer;
    int eval_every = 1;   // validation cadence in epochs
    int eval_k = 5;
    std::uint64_t seed = 0;
};

struct EpochRecord {
    int epoch;
    double objective_mean;  // per image
    double ms_per_batch;
    double val_p, val_r, val_f1;  // macro, top-k; carried forward between evals
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::string to_tsv() const;  // epoch\tobjective\tms_per_batch\tP\tR\tF1
};

/// Run the training loop, mutating net and table in place. Rows of the table
/// touched by an update are flipped on in trainable_mask.
TrainLog train(const Corpus& train_split, const Corpus& val_split, ProjectorNet& net,
               EmbeddingTable& table, const TrainConfig& cfg);

struct BenchmarkRow {
    std::string loss;
    int P, N, vocab;
    double ms_per_batch;
};

struct BenchmarkConfig {
    std::vector<LossKind> losses;
    std::vector<int> p_values{10};
    std::vector<int> n_values{10};
    std::vector<int> vocab_sizes{10000};
    int repetitions = 9;
    int batch_size = 32;
    int dim = 256;
    std::uint64_t seed = 1;
};

/// Median per-batch wall time of loss evaluation over the cartesian grid.
std::vector<BenchmarkRow> benchmark_scaling(const BenchmarkConfig& cfg);

std::string benchmark_to_tsv(const std::vector<BenchmarkRow>& rows);
const char* loss_kind_name(LossKind k);

struct Checkpoint {
    ProjectorNet net;
    EmbeddingTable table;
    EmbeddingSnapshot snapshot;
    TagVocabulary vocab;
    OptimizerState opt;
};

/// Versioned text container, bit-exact round trip (hexfloat), checksummed.
void save_checkpoint(const Checkpoint& ck, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tagspace
