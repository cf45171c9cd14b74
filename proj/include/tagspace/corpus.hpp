#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

namespace tagspace {

/// Frequency-ordered tag vocabulary with dense ids.
struct TagVocabulary {
    std::vector<std::string> tokens;      // id -> token
    std::vector<std::int64_t> frequencies;  // id -> count
    std::unordered_map<std::string, int> index;  // token -> id

    int size() const { return static_cast<int>(tokens.size()); }
    int id_of(const std::string& token) const {
        auto it = index.find(token);
        return it == index.end() ? -1 : it->second;
    }

    bool operator==(const TagVocabulary&) const = default;
};

struct ImageRecord {
    std::string id;
    std::vector<double> features;
    std::vector<int> tag_ids;  // deduplicated, sorted

    bool operator==(const ImageRecord&) const = default;
};

struct Corpus {
    std::vector<ImageRecord> records;
    TagVocabulary vocab;
    int feature_dim = 0;

    std::size_t size() const { return records.size(); }

    bool operator==(const Corpus&) const = default;
};

/// Load a corpus from a features file and a tags file, keeping only tokens
/// with frequency >= min_freq (descending frequency, lexicographic ties),
/// capped at max_vocab. Records left without tags are dropped.
Corpus load_corpus(const std::string& features_path, const std::string& tags_path,
                   int min_freq, int max_vocab);

/// Write features/tags/vocab.tsv files into `dir` (created if needed).
void save_corpus(const Corpus& c, const std::string& dir);

/// Deterministic disjoint split sharing one vocabulary.
std::tuple<Corpus, Corpus, Corpus> split_corpus(const Corpus& c,
                                                double train_frac, double val_frac,
                                                double test_frac, std::uint64_t seed);

/// Clustered toy corpus with ground truth kept for evaluation.
struct SyntheticCorpus {
    Corpus corpus;
    std::vector<int> cluster_of_record;          // aligned with corpus.records
    std::vector<std::vector<int>> cluster_tags;  // tag ids per cluster
    std::int64_t noise_tag_count = 0;            // tags drawn outside the image's cluster
    std::int64_t total_tag_count = 0;
};

SyntheticCorpus generate_synthetic(int num_clusters, int images_per_cluster,
                                   int tags_per_cluster, int feature_dim,
                                   double noise_tag_rate, std::uint64_t seed);

/// Relative tag frequencies; sums to 1.
std::vector<double> tag_distribution(const Corpus& c);

}  // namespace tagspace
