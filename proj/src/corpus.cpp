#include "tagspace/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "tagspace/errors.hpp"
#include "tagspace/matrix.hpp"

namespace tagspace {
namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

double parse_real(const std::string& tok, const std::string& path, std::size_t lineno) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad real '" + tok + "'");
    }
}

}  // namespace

Corpus load_corpus(const std::string& features_path, const std::string& tags_path,
                   int min_freq, int max_vocab) {
    if (min_freq < 1 || max_vocab < 1)
        throw ContractError("load_corpus: min_freq and max_vocab must be >= 1");

    std::ifstream ff(features_path);
    if (!ff) throw ParseError("cannot open features file: " + features_path);

    std::vector<std::pair<std::string, std::vector<double>>> feats;  // file order
    std::unordered_map<std::string, std::size_t> feat_index;
    std::string line;
    std::size_t lineno = 0;
    int dim = -1;
    while (std::getline(ff, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(features_path + ":" + std::to_string(lineno) + ": missing tab");
        std::string id = trim(line.substr(0, tab));
        std::vector<double> v;
        std::stringstream ss(line.substr(tab + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) v.push_back(parse_real(trim(tok), features_path, lineno));
        if (v.empty())
            throw ParseError(features_path + ":" + std::to_string(lineno) + ": empty feature vector");
        if (dim < 0) dim = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != dim)
            throw ParseError(features_path + ":" + std::to_string(lineno) +
                             ": feature dimension " + std::to_string(v.size()) +
                             " != " + std::to_string(dim));
        feat_index[id] = feats.size();
        feats.emplace_back(std::move(id), std::move(v));
    }

    std::ifstream tf(tags_path);
    if (!tf) throw ParseError("cannot open tags file: " + tags_path);
    std::unordered_map<std::string, std::vector<std::string>> tags_of;
    lineno = 0;
    while (std::getline(tf, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(tags_path + ":" + std::to_string(lineno) + ": missing tab");
        std::string id = trim(line.substr(0, tab));
        if (!feat_index.count(id))
            throw ParseError(tags_path + ":" + std::to_string(lineno) + ": id '" + id +
                             "' not present in features file");
        std::stringstream ss(line.substr(tab + 1));
        std::string tok;
        std::set<std::string> uniq;
        while (ss >> tok) uniq.insert(lower(trim(tok)));
        auto& dst = tags_of[id];
        dst.assign(uniq.begin(), uniq.end());
    }

    // Token counts over per-record tag sets.
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& [id, toks] : tags_of)
        for (const auto& t : toks) ++counts[t];

    std::vector<std::pair<std::string, std::int64_t>> kept;
    for (const auto& [t, c] : counts)
        if (c >= min_freq) kept.emplace_back(t, c);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (static_cast<int>(kept.size()) > max_vocab) kept.resize(max_vocab);

    Corpus c;
    c.feature_dim = std::max(dim, 0);
    for (const auto& [t, f] : kept) {
        c.vocab.index[t] = c.vocab.size();
        c.vocab.tokens.push_back(t);
        c.vocab.frequencies.push_back(f);
    }

    for (auto& [id, v] : feats) {
        auto it = tags_of.find(id);
        if (it == tags_of.end()) continue;
        std::vector<int> ids;
        for (const auto& t : it->second) {
            int tid = c.vocab.id_of(t);
            if (tid >= 0) ids.push_back(tid);
        }
        if (ids.empty()) continue;
        std::sort(ids.begin(), ids.end());
        c.records.push_back({std::move(id), std::move(v), std::move(ids)});
    }
    return c;
}

void save_corpus(const Corpus& c, const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream ff(dir + "/features.tsv");
    std::ofstream tf(dir + "/tags.tsv");
    std::ofstream vf(dir + "/vocab.tsv");
    if (!ff || !tf || !vf) throw ParseError("cannot write corpus files under " + dir);
    ff.precision(17);
    for (const auto& r : c.records) {
        ff << r.id << '\t';
        for (std::size_t i = 0; i < r.features.size(); ++i) {
            if (i) ff << ',';
            ff << r.features[i];
        }
        ff << '\n';
        tf << r.id << '\t';
        for (std::size_t i = 0; i < r.tag_ids.size(); ++i) {
            if (i) tf << ' ';
            tf << c.vocab.tokens[r.tag_ids[i]];
        }
        tf << '\n';
    }
    for (int i = 0; i < c.vocab.size(); ++i)
        vf << c.vocab.tokens[i] << '\t' << c.vocab.frequencies[i] << '\n';
}

std::tuple<Corpus, Corpus, Corpus> split_corpus(const Corpus& c, double train_frac,
                                                double val_frac, double test_frac,
                                                std::uint64_t seed) {
    if (train_frac <= 0 || val_frac <= 0 || test_frac <= 0)
        throw ContractError("split_corpus: all fractions must be positive");
    if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
        throw ContractError("split_corpus: fractions must sum to 1");

    const std::size_t n = c.records.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    auto n_train = static_cast<std::size_t>(train_frac * static_cast<double>(n));
    auto n_val = static_cast<std::size_t>(val_frac * static_cast<double>(n));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
        throw ContractError("split_corpus: degenerate split (an empty partition)");

    auto take = [&](std::size_t from, std::size_t count) {
        Corpus out;
        out.vocab = c.vocab;
        out.feature_dim = c.feature_dim;
        std::vector<std::size_t> sel(idx.begin() + from, idx.begin() + from + count);
        std::sort(sel.begin(), sel.end());  // preserve corpus order within a split
        for (auto i : sel) out.records.push_back(c.records[i]);
        return out;
    };
    return {take(0, n_train), take(n_train, n_val), take(n_train + n_val, n - n_train - n_val)};
}

SyntheticCorpus generate_synthetic(int num_clusters, int images_per_cluster,
                                   int tags_per_cluster, int feature_dim,
                                   double noise_tag_rate, std::uint64_t seed) {
    if (num_clusters < 1 || images_per_cluster < 1 || tags_per_cluster < 1 || feature_dim < 1)
        throw ContractError("generate_synthetic: all counts must be >= 1");
    if (noise_tag_rate < 0 || noise_tag_rate >= 1)
        throw ContractError("generate_synthetic: noise_tag_rate must be in [0,1)");
    if (feature_dim < num_clusters)
        throw ContractError("generate_synthetic: feature_dim < num_clusters, cannot build separated centroids");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // Orthonormal centroids via Gram-Schmidt on Gaussian draws.
    std::vector<std::vector<double>> centroids;
    while (static_cast<int>(centroids.size()) < num_clusters) {
        std::vector<double> v(feature_dim);
        for (double& x : v) x = gauss(rng);
        for (const auto& u : centroids) {
            double d = dot(v, u);
            for (int i = 0; i < feature_dim; ++i) v[i] -= d * u[i];
        }
        double nv = norm(v);
        if (nv < 1e-8) continue;
        for (double& x : v) x /= nv;
        centroids.push_back(std::move(v));
    }

    // Cluster tag pools as token strings; ids are assigned after frequency counting.
    std::vector<std::vector<std::string>> pool_tokens(num_clusters);
    for (int k = 0; k < num_clusters; ++k)
        for (int j = 0; j < tags_per_cluster; ++j)
            pool_tokens[k].push_back("c" + std::to_string(k) + "tag" + std::to_string(j));

    struct Raw {
        std::string id;
        std::vector<double> features;
        int cluster;
        std::vector<std::string> tags;
    };
    std::vector<Raw> raws;
    std::int64_t noise_count = 0, total_count = 0;
    std::normal_distribution<double> feat_noise(0.0, 0.08);

    for (int k = 0; k < num_clusters; ++k) {
        for (int m = 0; m < images_per_cluster; ++m) {
            Raw r;
            r.id = "img" + std::to_string(raws.size());
            r.cluster = k;
            r.features = centroids[k];
            for (double& x : r.features) x += feat_noise(rng);

            int want = std::uniform_int_distribution<int>(3, 10)(rng);
            int max_noise = (num_clusters - 1) * tags_per_cluster;
            int n_noise = 0;
            if (noise_tag_rate > 0 && max_noise > 0) {
                std::binomial_distribution<int> bin(want, noise_tag_rate);
                n_noise = std::min(bin(rng), max_noise);
            }
            int n_own = std::min(want - n_noise, tags_per_cluster);
            if (n_own < 1) n_own = 1;

            auto sample_distinct = [&](const std::vector<std::string>& from, int count,
                                       std::vector<std::string>& out) {
                std::vector<int> ix(from.size());
                std::iota(ix.begin(), ix.end(), 0);
                std::shuffle(ix.begin(), ix.end(), rng);
                for (int i = 0; i < count; ++i) out.push_back(from[ix[i]]);
            };
            sample_distinct(pool_tokens[k], n_own, r.tags);
            if (n_noise > 0) {
                std::vector<std::string> others;
                for (int q = 0; q < num_clusters; ++q)
                    if (q != k)
                        others.insert(others.end(), pool_tokens[q].begin(), pool_tokens[q].end());
                sample_distinct(others, n_noise, r.tags);
            }
            noise_count += n_noise;
            total_count += static_cast<std::int64_t>(r.tags.size());
            raws.push_back(std::move(r));
        }
    }

    // Vocabulary ordered like load_corpus: descending frequency, lexicographic ties.
    std::unordered_map<std::string, std::int64_t> counts;
    for (const auto& r : raws)
        for (const auto& t : r.tags) ++counts[t];
    std::vector<std::pair<std::string, std::int64_t>> kept(counts.begin(), counts.end());
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    SyntheticCorpus out;
    out.corpus.feature_dim = feature_dim;
    for (const auto& [t, f] : kept) {
        out.corpus.vocab.index[t] = out.corpus.vocab.size();
        out.corpus.vocab.tokens.push_back(t);
        out.corpus.vocab.frequencies.push_back(f);
    }
    out.cluster_tags.resize(num_clusters);
    for (int k = 0; k < num_clusters; ++k)
        for (const auto& t : pool_tokens[k]) {
            int tid = out.corpus.vocab.id_of(t);
            if (tid >= 0) out.cluster_tags[k].push_back(tid);
        }
    for (auto& r : raws) {
        std::vector<int> ids;
        for (const auto& t : r.tags) ids.push_back(out.corpus.vocab.id_of(t));
        std::sort(ids.begin(), ids.end());
        out.corpus.records.push_back({std::move(r.id), std::move(r.features), std::move(ids)});
        out.cluster_of_record.push_back(r.cluster);
    }
    out.noise_tag_count = noise_count;
    out.total_tag_count = total_count;
    return out;
}

std::vector<double> tag_distribution(const Corpus& c) {
    if (c.vocab.size() == 0) throw ContractError("tag_distribution: empty vocabulary");
    double total = 0;
    for (auto f : c.vocab.frequencies) total += static_cast<double>(f);
    if (total <= 0) throw ContractError("tag_distribution: zero total frequency");
    std::vector<double> p(c.vocab.size());
    for (int i = 0; i < c.vocab.size(); ++i)
        p[i] = static_cast<double>(c.vocab.frequencies[i]) / total;
    return p;
}

}  // namespace tagspace
