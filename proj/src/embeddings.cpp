#include "tagspace/embeddings.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "tagspace/errors.hpp"

namespace tagspace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log sigma(x) = -softplus(-x); stays finite for |x| up to ~1e308.
double log_sigmoid(double x) {
    if (x >= 0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double correlation(std::span<const double> v_a, std::span<const double> v_b) {
    if (v_a.size() != v_b.size()) throw ContractError("correlation: dimension mismatch");
    return sigmoid(dot(v_a, v_b));
}

namespace {

void fill_random_row(std::span<double> row, int dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-0.5 / dim, 0.5 / dim);
    for (double& x : row) x = u(rng);
}

}  // namespace

std::pair<EmbeddingTable, EmbeddingSnapshot> load_pretrained(
    const std::string& path, const TagVocabulary& vocab, int dim,
    MissingTokenPolicy policy, std::uint64_t seed) {
    if (dim < 1) throw ContractError("load_pretrained: dim must be >= 1");
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open vector file: " + path);

    EmbeddingTable table;
    table.dim = dim;
    table.vectors = Matrix(vocab.tokens.size(), dim);
    std::vector<bool> covered(vocab.tokens.size(), false);

    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(f, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string token;
        if (!(ss >> token)) continue;
        if (first) {
            first = false;
            // Optional "<count> <dim>" header.
            long long cnt, hdim;
            std::istringstream probe(line);
            if ((probe >> cnt >> hdim) && probe.eof()) {
                if (hdim != dim)
                    throw ParseError(path + ": header dimension " + std::to_string(hdim) +
                                     " != requested " + std::to_string(dim));
                continue;
            }
        }
        std::vector<double> v;
        double x;
        while (ss >> x) v.push_back(x);
        if (static_cast<int>(v.size()) != dim)
            throw ParseError(path + ":" + std::to_string(lineno) + ": vector dimension " +
                             std::to_string(v.size()) + " != " + std::to_string(dim));
        int id = vocab.id_of(token);
        if (id < 0) continue;
        std::copy(v.begin(), v.end(), table.vectors.row(id).begin());
        covered[id] = true;
    }

    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < covered.size(); ++i) {
        if (covered[i]) continue;
        if (policy == MissingTokenPolicy::Error)
            throw ParseError("load_pretrained: no vector for token '" + vocab.tokens[i] + "'");
        fill_random_row(table.vectors.row(i), dim, rng);
    }
    // Nothing is "seen" until training updates it; the trainer flips rows on.
    table.trainable_mask.assign(vocab.tokens.size(), false);
    return {table, EmbeddingSnapshot{table.vectors}};
}

std::pair<EmbeddingTable, EmbeddingSnapshot> random_table(const TagVocabulary& vocab,
                                                          int dim, std::uint64_t seed) {
    if (dim < 1) throw ContractError("random_table: dim must be >= 1");
    EmbeddingTable table;
    table.dim = dim;
    table.vectors = Matrix(vocab.tokens.size(), dim);
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < vocab.tokens.size(); ++i)
        fill_random_row(table.vectors.row(i), dim, rng);
    table.trainable_mask.assign(vocab.tokens.size(), false);
    return {table, EmbeddingSnapshot{table.vectors}};
}

void save_table(const EmbeddingTable& table, const TagVocabulary& vocab,
                const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot write vector file: " + path);
    f.precision(17);
    f << table.rows() << ' ' << table.dim << '\n';
    for (int i = 0; i < table.rows(); ++i) {
        f << vocab.tokens[i];
        for (double x : table.vectors.row(i)) f << ' ' << x;
        f << '\n';
    }
}

double snap_objective(const EmbeddingTable& table, const EmbeddingSnapshot& snapshot) {
    const int n = table.rows();
    double sum = 0;
    std::size_t pairs = 0;
    for (int d = 0; d < n; ++d) {
        if (table.trainable_mask[d]) continue;
        for (int m = 0; m < n; ++m) {
            if (m == d) continue;
            double c = sigmoid(dot(snapshot.initial_vectors.row(d), snapshot.initial_vectors.row(m)));
            double x = dot(table.vectors.row(d), table.vectors.row(m));
            sum += c * log_sigmoid(x) + (1.0 - c) * log_sigmoid(-x);
            ++pairs;
        }
    }
    return pairs ? sum / static_cast<double>(pairs) : 0.0;
}

void snap_oov(EmbeddingTable& table, const EmbeddingSnapshot& snapshot,
              int anchors_per_step, int steps, double lr, std::uint64_t seed) {
    if (anchors_per_step < 1) throw ContractError("snap_oov: anchors_per_step must be >= 1");
    const int n = table.rows();
    std::vector<int> unseen;
    for (int i = 0; i < n; ++i)
        if (!table.trainable_mask[i]) unseen.push_back(i);
    if (unseen.empty() || n < 2) return;

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<double> grad(table.dim);

    for (int step = 0; step < steps; ++step) {
        for (int d : unseen) {
            std::fill(grad.begin(), grad.end(), 0.0);
            for (int a = 0; a < anchors_per_step; ++a) {
                int m = pick(rng);
                while (m == d) m = pick(rng);
                // d/dv_d [C log s(x) + (1-C) log(1-s(x))] = (C - s(x)) v_m
                double c = sigmoid(dot(snapshot.initial_vectors.row(d),
                                       snapshot.initial_vectors.row(m)));
                double s = sigmoid(dot(table.vectors.row(d), table.vectors.row(m)));
                axpy(c - s, table.vectors.row(m), grad);
            }
            if (!all_finite(grad))
                throw NumericalError("snap_oov: non-finite gradient for row " + std::to_string(d));
            axpy(lr / anchors_per_step, grad, table.vectors.row(d));
        }
    }
}

}  // namespace tagspace
