#pragma once

#include <string>
#include <vector>

#include "tagspace/corpus.hpp"
#include "tagspace/embeddings.hpp"
#include "tagspace/matrix.hpp"
#include "tagspace/model.hpp"

namespace tagspace {

struct ScoredId {
    int id;
    double score;
};

struct ScoredImage {
    std::string id;
    double score;
};

/// L2-normalized projected features for exhaustive retrieval.
struct RetrievalIndex {
    std::vector<std::string> ids;
    Matrix unit_vectors;  // M x d
    int skipped = 0;      // zero-norm projections dropped during build
};

/// Macro (per-image averaged) and micro (corpus-pooled) precision/recall/F1.
struct EvalReport {
    int k = 0;
    double macro_p = 0, macro_r = 0, macro_f1 = 0;
    double micro_p = 0, micro_r = 0, micro_f1 = 0;
};

/// Top-k tags for a projected feature by cosine similarity; ties broken by
/// ascending tag id.
std::vector<ScoredId> tag_image(std::span<const double> f, const EmbeddingTable& table,
                                int k);

RetrievalIndex build_index(const Corpus& corpus, const ProjectorNet& net);

/// Top-n images for a text query. The query vector is the normalized mean of
/// the in-vocabulary token vectors.
std::vector<ScoredImage> retrieve_images(const std::vector<std::string>& query_tokens,
                                         const EmbeddingTable& table,
                                         const TagVocabulary& vocab,
                                         const RetrievalIndex& index, int n);

EvalReport evaluate(const std::vector<std::vector<int>>& predictions,
                    const std::vector<std::vector<int>>& truths, int k);

/// Tag every record of `corpus` through `net` and score against its true tags.
EvalReport evaluate_corpus(const Corpus& corpus, const ProjectorNet& net,
                           const EmbeddingTable& table, int k);

std::string format_report(const EvalReport& r);

}  // namespace tagspace
