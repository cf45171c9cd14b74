#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tagspace/corpus.hpp"
#include "tagspace/matrix.hpp"

namespace tagspace {

/// The word-vector table V: one d-dimensional row per vocabulary token.
/// trainable_mask marks rows seen during image training (updated) vs not.
struct EmbeddingTable {
    Matrix vectors;                 // |V| x d
    int dim = 0;
    std::vector<bool> trainable_mask;  // true = seen in image corpus

    int rows() const { return static_cast<int>(vectors.rows()); }
};

/// Copy of the table captured before training, source of initial correlations.
struct EmbeddingSnapshot {
    Matrix initial_vectors;
};

enum class MissingTokenPolicy { Random, Error };

/// Load pretrained vectors for a vocabulary. Tokens absent from the file are
/// filled per policy (Random: uniform in [-0.5/d, 0.5/d], seeded).
std::pair<EmbeddingTable, EmbeddingSnapshot> load_pretrained(
    const std::string& path, const TagVocabulary& vocab, int dim,
    MissingTokenPolicy policy, std::uint64_t seed = 0);

/// Build a table directly (synthetic runs, tests). Same init range as above.
std::pair<EmbeddingTable, EmbeddingSnapshot> random_table(const TagVocabulary& vocab,
                                                          int dim, std::uint64_t seed);

/// Dump in the pretrained text format, id order.
void save_table(const EmbeddingTable& table, const TagVocabulary& vocab,
                const std::string& path);

double sigmoid(double x);
double log_sigmoid(double x);

/// sigma(v_a . v_b), the nonlinear correlation between two word vectors.
double correlation(std::span<const double> v_a, std::span<const double> v_b);

/// Mean binary cross-entropy between current correlations sigma(v_d.v_m) and
/// the snapshot correlations, over all (unseen d, any m != d) pairs. This is
/// the quantity snap_oov ascends (it reports the positive objective, higher
/// is better).
double snap_objective(const EmbeddingTable& table, const EmbeddingSnapshot& snapshot);

/// Gradient-ascend unseen rows so their correlations to sampled anchor rows
/// match the snapshot correlations. Seen rows are never touched.
void snap_oov(EmbeddingTable& table, const EmbeddingSnapshot& snapshot,
              int anchors_per_step, int steps, double lr, std::uint64_t seed);

}  // namespace tagspace
