#include "tagspace/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "tagspace/errors.hpp"

namespace tagspace {

std::vector<int> sample_positives(const ImageRecord& record, int P, std::mt19937_64& rng) {
    if (record.tag_ids.empty()) throw ContractError("sample_positives: record has no tags");
    if (P < 1) throw ContractError("sample_positives: P must be >= 1");

    std::vector<int> out;
    out.reserve(P);
    const auto& tags = record.tag_ids;
    if (static_cast<int>(tags.size()) >= P) {
        std::vector<int> pool = tags;
        std::shuffle(pool.begin(), pool.end(), rng);
        out.assign(pool.begin(), pool.begin() + P);
    } else {
        std::uniform_int_distribution<std::size_t> u(0, tags.size() - 1);
        for (int i = 0; i < P; ++i) out.push_back(tags[u(rng)]);
    }
    return out;
}

std::vector<int> sample_negatives_unigram(const std::vector<double>& dist,
                                          const std::vector<int>& tabu, int N,
                                          double power, std::mt19937_64& rng) {
    if (N < 1) throw ContractError("sample_negatives_unigram: N must be >= 1");
    if (power < 0) throw ContractError("sample_negatives_unigram: power must be >= 0");

    std::vector<double> w(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i)
        w[i] = dist[i] > 0 ? std::pow(dist[i], power) : 0.0;

    std::unordered_set<int> tabu_set(tabu.begin(), tabu.end());
    double usable = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (!tabu_set.count(static_cast<int>(i))) usable += w[i];
    if (usable <= 0)
        throw ContractError("sample_negatives_unigram: tabu set covers all candidate mass");

    std::discrete_distribution<int> draw(w.begin(), w.end());
    std::vector<int> out;
    out.reserve(N);
    while (static_cast<int>(out.size()) < N) {
        int id = draw(rng);
        if (!tabu_set.count(id)) out.push_back(id);
    }
    return out;
}

std::vector<int> build_epoch_pool(const std::vector<double>& dist, int pool_size,
                                  std::mt19937_64& rng) {
    if (pool_size < 1) throw ContractError("build_epoch_pool: pool_size must be >= 1");
    std::discrete_distribution<int> draw(dist.begin(), dist.end());
    std::vector<int> pool(pool_size);
    for (int& id : pool) id = draw(rng);
    return pool;
}

namespace {

// Uniform draws from `pool` rejecting tabu ids; unigram fallback when the
// pool has no usable member.
std::vector<int> negatives_from_pool(const std::vector<int>& pool,
                                     const std::vector<int>& tabu, int N,
                                     const std::vector<double>& dist, double power,
                                     std::mt19937_64& rng) {
    std::unordered_set<int> tabu_set(tabu.begin(), tabu.end());
    std::vector<int> usable;
    for (int id : pool)
        if (!tabu_set.count(id)) usable.push_back(id);
    if (usable.empty()) return sample_negatives_unigram(dist, tabu, N, power, rng);
    std::uniform_int_distribution<std::size_t> u(0, usable.size() - 1);
    std::vector<int> out;
    out.reserve(N);
    for (int i = 0; i < N; ++i) out.push_back(usable[u(rng)]);
    return out;
}

}  // namespace

std::vector<int> sample_negatives_adjacent(const std::vector<const ImageRecord*>& batch,
                                           std::size_t index, int N,
                                           const std::vector<double>& dist, double power,
                                           std::mt19937_64& rng) {
    if (batch.size() < 2) throw ContractError("sample_negatives_adjacent: batch must have >= 2 records");
    const ImageRecord& self = *batch[index];
    const ImageRecord& next = *batch[(index + 1) % batch.size()];
    return negatives_from_pool(next.tag_ids, self.tag_ids, N, dist, power, rng);
}

std::vector<SampleBatch> make_batches(const Corpus& corpus, int batch_size,
                                      const SamplerConfig& config, int epoch) {
    if (batch_size < 1) throw ContractError("make_batches: batch_size must be >= 1");
    if (config.negative_strategy == NegativeStrategy::Adjacent && batch_size < 2)
        throw ContractError("make_batches: adjacent strategy needs batch_size >= 2");
    if (config.num_positive < 1 || config.num_negative < 1)
        throw ContractError("make_batches: P and N must be >= 1");
    if (config.negative_strategy == NegativeStrategy::EpochPool &&
        config.pool_size < config.num_negative)
        throw ContractError("make_batches: pool_size must be >= N");

    // One stream per (seed, epoch); everything downstream draws from it.
    std::mt19937_64 rng(config.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(epoch) + 1);

    std::vector<std::size_t> order(corpus.records.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const auto dist = tag_distribution(corpus);
    std::vector<int> pool;
    if (config.negative_strategy == NegativeStrategy::EpochPool)
        pool = build_epoch_pool(dist, config.pool_size, rng);

    const std::size_t B = static_cast<std::size_t>(batch_size);
    const std::size_t num_batches = corpus.records.size() / B;
    std::vector<SampleBatch> batches;
    batches.reserve(num_batches);

    for (std::size_t b = 0; b < num_batches; ++b) {
        SampleBatch batch;
        batch.features = Matrix(B, corpus.feature_dim);
        batch.record_indices.assign(order.begin() + b * B, order.begin() + (b + 1) * B);

        std::vector<const ImageRecord*> recs(B);
        for (std::size_t i = 0; i < B; ++i) recs[i] = &corpus.records[batch.record_indices[i]];

        for (std::size_t i = 0; i < B; ++i) {
            const ImageRecord& r = *recs[i];
            std::copy(r.features.begin(), r.features.end(), batch.features.row(i).begin());
            batch.positives.push_back(sample_positives(r, config.num_positive, rng));
            switch (config.negative_strategy) {
                case NegativeStrategy::Unigram:
                    batch.negatives.push_back(sample_negatives_unigram(
                        dist, r.tag_ids, config.num_negative, config.unigram_power, rng));
                    break;
                case NegativeStrategy::EpochPool:
                    batch.negatives.push_back(negatives_from_pool(
                        pool, r.tag_ids, config.num_negative, dist, config.unigram_power, rng));
                    break;
                case NegativeStrategy::Adjacent:
                    batch.negatives.push_back(sample_negatives_adjacent(
                        recs, i, config.num_negative, dist, config.unigram_power, rng));
                    break;
            }
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

}  // namespace tagspace
