#include "tagspace/losses.hpp"

#include <string>

#include "tagspace/errors.hpp"

namespace tagspace {

void LossValue::accumulate_v(int id, double scale, std::span<const double> vec) {
    auto& g = grad_v[id];
    if (g.empty()) g.assign(vec.size(), 0.0);
    axpy(scale, vec, g);
}

namespace {

void check_shapes(const Matrix& f_batch, const std::vector<std::vector<int>>& positives,
                  const std::vector<std::vector<int>>& negatives, const EmbeddingTable& table,
                  const char* who) {
    if (f_batch.rows() != positives.size() || f_batch.rows() != negatives.size())
        throw ContractError(std::string(who) + ": batch row count mismatch");
    if (static_cast<int>(f_batch.cols()) != table.dim)
        throw ContractError(std::string(who) + ": f dimension != table dimension");
}

void check_row_finite(double x, std::size_t row, const char* who) {
    if (!std::isfinite(x))
        throw NumericalError(std::string(who) + ": non-finite value at batch row " +
                             std::to_string(row));
}

}  // namespace

LossValue sampled_nce_loss(const Matrix& f_batch,
                           const std::vector<std::vector<int>>& positives,
                           const std::vector<std::vector<int>>& negatives,
                           const EmbeddingTable& table, const LossConfig& cfg) {
    check_shapes(f_batch, positives, negatives, table, "sampled_nce_loss");
    const double w_pp = cfg.pp(), w_pn = cfg.pn();
    const bool opt_v = cfg.optimize_wordvecs;

    LossValue out;
    out.grad_f = Matrix(f_batch.rows(), f_batch.cols());

    for (std::size_t b = 0; b < f_batch.rows(); ++b) {
        auto f = f_batch.row(b);
        auto gf = out.grad_f.row(b);
        const auto& pos = positives[b];
        const auto& neg = negatives[b];

        for (int p : pos) {
            auto vp = table.vectors.row(p);
            double x = dot(f, vp);
            out.objective += log_sigmoid(x);
            double s = sigmoid(-x);
            axpy(s, vp, gf);
            if (opt_v) out.accumulate_v(p, s, f);
        }
        for (int n : neg) {
            auto vn = table.vectors.row(n);
            double x = dot(f, vn);
            out.objective += log_sigmoid(-x);
            double s = sigmoid(x);
            axpy(-s, vn, gf);
            if (opt_v) out.accumulate_v(n, -s, f);
        }

        // Tag co-occurrence terms. Unordered pairs for pos-pos; all pairs
        // for pos-neg. Gradients only matter when word vectors are trained,
        // but the objective value always includes them. Zero-weight terms
        // contribute exactly nothing, so skip their O(P^2 + PN) work.
        if (w_pp == 0.0 && w_pn == 0.0) continue;
        for (std::size_t i = 0; i < pos.size(); ++i) {
            auto vi = table.vectors.row(pos[i]);
            for (std::size_t j = i + 1; j < pos.size(); ++j) {
                auto vj = table.vectors.row(pos[j]);
                double x = dot(vi, vj);
                double g;
                if (cfg.raw_sigmoid_tag_terms) {
                    double s = sigmoid(x);
                    out.objective += w_pp * s;
                    g = w_pp * s * (1.0 - s);
                } else {
                    out.objective += w_pp * log_sigmoid(x);
                    g = w_pp * sigmoid(-x);
                }
                if (opt_v) {
                    out.accumulate_v(pos[i], g, vj);
                    out.accumulate_v(pos[j], g, vi);
                }
            }
            for (int n : neg) {
                auto vn = table.vectors.row(n);
                double x = dot(vi, vn);
                double g;
                if (cfg.raw_sigmoid_tag_terms) {
                    double s = sigmoid(-x);
                    out.objective += w_pn * s;
                    g = w_pn * s * (1.0 - s);
                } else {
                    out.objective += w_pn * log_sigmoid(-x);
                    g = w_pn * sigmoid(x);
                }
                if (opt_v) {
                    out.accumulate_v(pos[i], -g, vn);
                    out.accumulate_v(n, -g, vi);
                }
            }
        }
        check_row_finite(out.objective, b, "sampled_nce_loss");
    }
    return out;
}

LossValue full_xent_loss(const Matrix& f_batch, const std::vector<std::vector<int>>& labels,
                         const EmbeddingTable& table, bool optimize_wordvecs) {
    if (f_batch.rows() != labels.size())
        throw ContractError("full_xent_loss: batch row count mismatch");
    if (static_cast<int>(f_batch.cols()) != table.dim)
        throw ContractError("full_xent_loss: f dimension != table dimension");

    LossValue out;
    out.grad_f = Matrix(f_batch.rows(), f_batch.cols());
    const int V = table.rows();

    for (std::size_t b = 0; b < f_batch.rows(); ++b) {
        auto f = f_batch.row(b);
        auto gf = out.grad_f.row(b);
        std::vector<char> y(V, 0);
        for (int t : labels[b]) y[t] = 1;

        for (int i = 0; i < V; ++i) {
            auto vi = table.vectors.row(i);
            double x = dot(f, vi);
            double coeff;  // d/dx of the row's term
            if (y[i]) {
                out.objective += log_sigmoid(x);
                coeff = sigmoid(-x);
            } else {
                out.objective += log_sigmoid(-x);
                coeff = -sigmoid(x);
            }
            axpy(coeff, vi, gf);
            if (optimize_wordvecs) out.accumulate_v(i, coeff, f);
        }
        check_row_finite(out.objective, b, "full_xent_loss");
    }
    return out;
}

LossValue fast0tag_loss(const Matrix& f_batch,
                        const std::vector<std::vector<int>>& positives,
                        const std::vector<std::vector<int>>& negatives,
                        const EmbeddingTable& table, double beta, bool optimize_wordvecs) {
    check_shapes(f_batch, positives, negatives, table, "fast0tag_loss");

    LossValue out;
    out.grad_f = Matrix(f_batch.rows(), f_batch.cols());

    for (std::size_t b = 0; b < f_batch.rows(); ++b) {
        auto f = f_batch.row(b);
        auto gf = out.grad_f.row(b);
        for (int p : positives[b]) {
            auto vp = table.vectors.row(p);
            double fp = dot(f, vp);
            for (int n : negatives[b]) {
                auto vn = table.vectors.row(n);
                double x = fp - dot(f, vn);
                out.objective += beta * log_sigmoid(x);
                double g = beta * sigmoid(-x);
                axpy(g, vp, gf);
                axpy(-g, vn, gf);
                if (optimize_wordvecs) {
                    out.accumulate_v(p, g, f);
                    out.accumulate_v(n, -g, f);
                }
            }
        }
        check_row_finite(out.objective, b, "fast0tag_loss");
    }
    return out;
}

std::vector<double> avg_wordvec_target(const std::vector<int>& positives,
                                       const EmbeddingTable& table) {
    if (positives.empty()) throw ContractError("avg_wordvec_target: no positives");
    std::vector<double> t(table.dim, 0.0);
    for (int p : positives) axpy(1.0 / positives.size(), table.vectors.row(p), t);
    return t;
}

LossValue avg_wordvec_loss(const Matrix& f_batch,
                           const std::vector<std::vector<int>>& positives,
                           const EmbeddingTable& table, bool optimize_wordvecs) {
    if (f_batch.rows() != positives.size())
        throw ContractError("avg_wordvec_loss: batch row count mismatch");

    LossValue out;
    out.grad_f = Matrix(f_batch.rows(), f_batch.cols());

    for (std::size_t b = 0; b < f_batch.rows(); ++b) {
        auto f = f_batch.row(b);
        auto gf = out.grad_f.row(b);
        auto t = avg_wordvec_target(positives[b], table);
        double sq = 0;
        for (std::size_t i = 0; i < f.size(); ++i) {
            double r = f[i] - t[i];
            sq += r * r;
            gf[i] = -2.0 * r;
        }
        out.objective -= sq;
        if (optimize_wordvecs) {
            std::vector<double> resid(f.size());
            for (std::size_t i = 0; i < f.size(); ++i) resid[i] = f[i] - t[i];
            for (int p : positives[b])
                out.accumulate_v(p, 2.0 / positives[b].size(), resid);
        }
        check_row_finite(out.objective, b, "avg_wordvec_loss");
    }
    return out;
}

}  // namespace tagspace
