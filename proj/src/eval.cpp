#include "tagspace/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "tagspace/errors.hpp"

namespace tagspace {

std::vector<ScoredId> tag_image(std::span<const double> f, const EmbeddingTable& table,
                                int k) {
    if (k < 1 || k > table.rows()) throw ContractError("tag_image: k out of range");
    double fn = norm(f);
    if (fn == 0) throw ContractError("tag_image: zero query vector");

    std::vector<ScoredId> all;
    all.reserve(table.rows());
    for (int i = 0; i < table.rows(); ++i) {
        auto v = table.vectors.row(i);
        double vn = norm(v);
        double s = vn == 0 ? -1.0 : dot(f, v) / (fn * vn);
        all.push_back({i, s});
    }
    auto cmp = [](const ScoredId& a, const ScoredId& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.id < b.id;
    };
    std::partial_sort(all.begin(), all.begin() + k, all.end(), cmp);
    all.resize(k);
    return all;
}

RetrievalIndex build_index(const Corpus& corpus, const ProjectorNet& net) {
    RetrievalIndex idx;
    if (corpus.records.empty()) return idx;

    Matrix x(corpus.records.size(), corpus.feature_dim);
    for (std::size_t i = 0; i < corpus.records.size(); ++i)
        std::copy(corpus.records[i].features.begin(), corpus.records[i].features.end(),
                  x.row(i).begin());
    Matrix f = net.forward(x);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < f.rows(); ++i) {
        if (norm(f.row(i)) == 0) {
            ++idx.skipped;
            continue;
        }
        keep.push_back(i);
    }
    idx.unit_vectors = Matrix(keep.size(), f.cols());
    for (std::size_t j = 0; j < keep.size(); ++j) {
        auto src = f.row(keep[j]);
        auto dst = idx.unit_vectors.row(j);
        double n = norm(src);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] = src[c] / n;
        idx.ids.push_back(corpus.records[keep[j]].id);
    }
    return idx;
}

std::vector<ScoredImage> retrieve_images(const std::vector<std::string>& query_tokens,
                                         const EmbeddingTable& table,
                                         const TagVocabulary& vocab,
                                         const RetrievalIndex& index, int n) {
    if (n < 1) throw ContractError("retrieve_images: n must be >= 1");
    std::vector<double> q(table.dim, 0.0);
    int found = 0;
    std::string missing;
    for (const auto& tok : query_tokens) {
        int id = vocab.id_of(tok);
        if (id < 0) {
            missing += missing.empty() ? tok : (", " + tok);
            continue;
        }
        axpy(1.0, table.vectors.row(id), q);
        ++found;
    }
    if (found == 0)
        throw QueryError("no query token found in vocabulary: " + missing);
    double qn = norm(q);
    if (qn == 0) throw QueryError("query vector has zero norm");
    for (double& x : q) x /= qn;

    std::vector<std::size_t> order(index.ids.size());
    std::vector<double> scores(index.ids.size());
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
        order[i] = i;
        scores[i] = dot(q, index.unit_vectors.row(i));
    }
    std::size_t take = std::min<std::size_t>(n, order.size());
    auto cmp = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return index.ids[a] < index.ids[b];
    };
    std::partial_sort(order.begin(), order.begin() + take, order.end(), cmp);

    std::vector<ScoredImage> out;
    for (std::size_t i = 0; i < take; ++i) out.push_back({index.ids[order[i]], scores[order[i]]});
    return out;
}

EvalReport evaluate(const std::vector<std::vector<int>>& predictions,
                    const std::vector<std::vector<int>>& truths, int k) {
    if (predictions.size() != truths.size())
        throw ContractError("evaluate: predictions and truths misaligned");
    for (const auto& p : predictions)
        if (static_cast<int>(p.size()) > k)
            throw ContractError("evaluate: prediction list longer than k");

    EvalReport r;
    r.k = k;
    const std::size_t n = predictions.size();
    double sum_p = 0, sum_r = 0;
    long long tp_all = 0, pred_all = 0, truth_all = 0;

    for (std::size_t i = 0; i < n; ++i) {
        std::set<int> truth(truths[i].begin(), truths[i].end());
        long long tp = 0;
        for (int id : predictions[i]) tp += truth.count(id);
        long long np = static_cast<long long>(predictions[i].size());
        long long nt = static_cast<long long>(truth.size());
        // Empty prediction/truth contributes zero rather than being skipped.
        sum_p += np > 0 ? static_cast<double>(tp) / np : 0.0;
        sum_r += nt > 0 ? static_cast<double>(tp) / nt : 0.0;
        tp_all += tp;
        pred_all += np;
        truth_all += nt;
    }
    if (n > 0) {
        r.macro_p = sum_p / n;
        r.macro_r = sum_r / n;
    }
    r.micro_p = pred_all > 0 ? static_cast<double>(tp_all) / pred_all : 0.0;
    r.micro_r = truth_all > 0 ? static_cast<double>(tp_all) / truth_all : 0.0;
    auto f1 = [](double p, double rr) { return p + rr > 0 ? 2 * p * rr / (p + rr) : 0.0; };
    r.macro_f1 = f1(r.macro_p, r.macro_r);
    r.micro_f1 = f1(r.micro_p, r.micro_r);
    return r;
}

EvalReport evaluate_corpus(const Corpus& corpus, const ProjectorNet& net,
                           const EmbeddingTable& table, int k) {
    Matrix x(corpus.records.size(), corpus.feature_dim);
    for (std::size_t i = 0; i < corpus.records.size(); ++i)
        std::copy(corpus.records[i].features.begin(), corpus.records[i].features.end(),
                  x.row(i).begin());
    Matrix f = net.forward(x);

    std::vector<std::vector<int>> preds, truths;
    int kk = std::min(k, table.rows());
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        std::vector<int> p;
        for (const auto& s : tag_image(f.row(i), table, kk)) p.push_back(s.id);
        preds.push_back(std::move(p));
        truths.push_back(corpus.records[i].tag_ids);
    }
    return evaluate(preds, truths, k);
}

std::string format_report(const EvalReport& r) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed;
    os << "top-" << r.k << "  macro P/R/F1: " << r.macro_p << " / " << r.macro_r << " / "
       << r.macro_f1 << "  micro P/R/F1: " << r.micro_p << " / " << r.micro_r << " / "
       << r.micro_f1;
    return os.str();
}

}  // namespace tagspace
