#pragma once

#include <cmath>
#include <unordered_map>
#include <vector>

#include "tagspace/embeddings.hpp"
#include "tagspace/matrix.hpp"

namespace tagspace {

enum class LossKind { SampledNce, FullXent, Fast0TagFull, Fast0TagSampled, AvgWordVec };

struct LossConfig {
    LossKind kind = LossKind::SampledNce;
    double alpha = 0.01;          // weight on both tag co-occurrence terms
    double weight_pp = -1.0;      // override for the positive-positive term (< 0: use alpha)
    double weight_pn = -1.0;      // override for the positive-negative term (< 0: use alpha)
    double beta = 1.0;            // ranking-loss scale
    bool optimize_wordvecs = true;
    bool raw_sigmoid_tag_terms = false;  // literal sigma instead of log sigma on tag terms

    double pp() const { return weight_pp < 0 ? alpha : weight_pp; }
    double pn() const { return weight_pn < 0 ? alpha : weight_pn; }
};

/// Objective value (to MAXIMIZE) with gradients for the projector outputs
/// and for the word-vector rows the batch touched.
struct LossValue {
    double objective = 0.0;
    Matrix grad_f;  // B x d
    std::unordered_map<int, std::vector<double>> grad_v;  // touched rows only

    void accumulate_v(int id, double scale, std::span<const double> vec);
};

/// Sampled skip-image objective: per row,
///   sum_p log s(f.v_p) + sum_n log s(-f.v_n)
///   + w_pp sum_{p<p'} log s(v_p.v_p') + w_pn sum_{p,n} log s(-v_p.v_n).
LossValue sampled_nce_loss(const Matrix& f_batch,
                           const std::vector<std::vector<int>>& positives,
                           const std::vector<std::vector<int>>& negatives,
                           const EmbeddingTable& table, const LossConfig& cfg);

/// Full-vocabulary multi-label cross-entropy (oracle; materializes all |V|
/// scores per row). `labels` holds each row's true tag-id set.
LossValue full_xent_loss(const Matrix& f_batch,
                         const std::vector<std::vector<int>>& labels,
                         const EmbeddingTable& table, bool optimize_wordvecs);

/// Pairwise ranking objective: beta * sum_p sum_n log s(f.(v_p - v_n)).
/// Full mode passes the complete tag / non-tag sets; sampled mode the fixed
/// P x N sample.
LossValue fast0tag_loss(const Matrix& f_batch,
                        const std::vector<std::vector<int>>& positives,
                        const std::vector<std::vector<int>>& negatives,
                        const EmbeddingTable& table, double beta, bool optimize_wordvecs);

/// Mean of the positive tags' vectors.
std::vector<double> avg_wordvec_target(const std::vector<int>& positives,
                                       const EmbeddingTable& table);

/// Baseline: maximize -||f - mean(v_p)||^2 per row.
LossValue avg_wordvec_loss(const Matrix& f_batch,
                           const std::vector<std::vector<int>>& positives,
                           const EmbeddingTable& table, bool optimize_wordvecs);

}  // namespace tagspace
