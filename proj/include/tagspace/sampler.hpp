#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tagspace/corpus.hpp"
#include "tagspace/matrix.hpp"

namespace tagspace {

enum class NegativeStrategy { Unigram, EpochPool, Adjacent };

struct SamplerConfig {
    int num_positive = 5;
    int num_negative = 10;
    NegativeStrategy negative_strategy = NegativeStrategy::Unigram;
    double unigram_power = 1.0;
    int pool_size = 10000;
    std::uint64_t seed = 0;
};

/// Fixed-shape training batch: every row carries exactly P positives and
/// N negatives so the loss kernels can run over rectangular arrays.
struct SampleBatch {
    Matrix features;                      // B x F
    std::vector<std::vector<int>> positives;  // B rows of P ids
    std::vector<std::vector<int>> negatives;  // B rows of N ids
    std::vector<std::size_t> record_indices;  // into the source corpus

    std::size_t size() const { return record_indices.size(); }
};

/// P tags of the record: without replacement when it has >= P tags,
/// with replacement otherwise.
std::vector<int> sample_positives(const ImageRecord& record, int P, std::mt19937_64& rng);

/// N i.i.d. draws from dist^power (renormalized), rejecting ids in tabu.
std::vector<int> sample_negatives_unigram(const std::vector<double>& dist,
                                          const std::vector<int>& tabu, int N,
                                          double power, std::mt19937_64& rng);

/// Per-epoch candidate pool drawn i.i.d. from the tag distribution.
std::vector<int> build_epoch_pool(const std::vector<double>& dist, int pool_size,
                                  std::mt19937_64& rng);

/// Negatives from the next record's tags (cyclic), excluding this record's
/// own tags; falls back to unigram draws when exclusion empties the pool.
std::vector<int> sample_negatives_adjacent(const std::vector<const ImageRecord*>& batch,
                                           std::size_t index, int N,
                                           const std::vector<double>& dist, double power,
                                           std::mt19937_64& rng);

/// All full batches of one epoch, shuffled deterministically by (seed, epoch).
/// The trailing partial batch is dropped.
std::vector<SampleBatch> make_batches(const Corpus& corpus, int batch_size,
                                      const SamplerConfig& config, int epoch);

}  // namespace tagspace
