#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "doctest.h"
#include "tagspace/corpus.hpp"
#include "tagspace/errors.hpp"
#include "tagspace/matrix.hpp"

using namespace tagspace;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("tagspace_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        auto p = (path / name).string();
        std::ofstream(p) << content;
        return p;
    }
};

}  // namespace

TEST_CASE("load_corpus applies the frequency cutoff per token") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv",
                          "img1\t1.0,2.0\n"
                          "img2\t3.0,4.0\n"
                          "img3\t5.0,6.0\n");
    auto tags = tmp.file("t.tsv",
                         "img1\ta a-typo\n"
                         "img2\ta b\n"
                         "img3\tb\n");
    auto c = load_corpus(feats, tags, 2, 1000);
    REQUIRE(c.vocab.size() == 2);
    CHECK(c.vocab.tokens[0] == "a");
    CHECK(c.vocab.tokens[1] == "b");
    REQUIRE(c.records.size() == 3);
    CHECK(c.records[0].tag_ids == std::vector<int>{0});  // img1 keeps only "a"
    CHECK(c.records[1].tag_ids == std::vector<int>{0, 1});
    CHECK(c.feature_dim == 2);
}

TEST_CASE("load_corpus min_freq=1 keeps everything") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv", "a\t1.0\nb\t2.0\n");
    auto tags = tmp.file("t.tsv", "a\tx unique1\nb\tunique2\n");
    auto c = load_corpus(feats, tags, 1, 1 << 30);
    CHECK(c.vocab.size() == 3);
    CHECK(c.records.size() == 2);
}

TEST_CASE("load_corpus drops records whose tags are all pruned") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv", "img1\t1.0\nimg2\t2.0\n");
    auto tags = tmp.file("t.tsv", "img1\trare\nimg2\tcommon common2\n");
    auto c = load_corpus(feats, tags, 2, 1000);
    CHECK(c.vocab.size() == 0);
    CHECK(c.records.empty());
}

TEST_CASE("load_corpus error paths carry line numbers") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv", "img1\t1.0,2.0\nimg2 no tab here\n");
    auto tags = tmp.file("t.tsv", "img1\ta\n");
    CHECK_THROWS_WITH_AS(load_corpus(feats, tags, 1, 10), doctest::Contains(":2"), ParseError);

    auto feats2 = tmp.file("f2.tsv", "img1\t1.0,2.0\nimg2\t3.0\n");
    CHECK_THROWS_WITH_AS(load_corpus(feats2, tags, 1, 10), doctest::Contains("dimension"),
                         ParseError);

    auto feats3 = tmp.file("f3.tsv", "img1\t1.0\n");
    auto tags3 = tmp.file("t3.tsv", "img1\ta\nghost\tb\n");
    CHECK_THROWS_WITH_AS(load_corpus(feats3, tags3, 1, 10), doctest::Contains("ghost"),
                         ParseError);
}

TEST_CASE("load_corpus lowercases and deduplicates tags") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv", "img1\t1.0\n");
    auto tags = tmp.file("t.tsv", "img1\tBeach beach BEACH sun\n");
    auto c = load_corpus(feats, tags, 1, 10);
    CHECK(c.vocab.size() == 2);
    CHECK(c.records[0].tag_ids.size() == 2);
    CHECK(c.vocab.frequencies[c.vocab.id_of("beach")] == 1);
}

TEST_CASE("corpus round-trip through the canonical dump") {
    auto syn = generate_synthetic(3, 20, 6, 8, 0.2, 11);
    TempDir tmp;
    save_corpus(syn.corpus, tmp.path.string());
    auto re = load_corpus((tmp.path / "features.tsv").string(),
                          (tmp.path / "tags.tsv").string(), 1, 1 << 30);
    CHECK(re == syn.corpus);
}

TEST_CASE("vocabulary ordering is deterministic across loads") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv", "i1\t1.0\ni2\t2.0\ni3\t3.0\n");
    auto tags = tmp.file("t.tsv", "i1\tzeta alpha\ni2\tzeta beta\ni3\talpha\n");
    auto a = load_corpus(feats, tags, 1, 100);
    auto b = load_corpus(feats, tags, 1, 100);
    CHECK(a.vocab.tokens == b.vocab.tokens);
    // alpha and zeta tie at freq 2: lexicographic tie-break.
    CHECK(a.vocab.tokens[0] == "alpha");
    CHECK(a.vocab.tokens[1] == "zeta");
    CHECK(a.vocab.tokens[2] == "beta");
}

TEST_CASE("split_corpus partitions deterministically") {
    auto syn = generate_synthetic(2, 5, 4, 4, 0.0, 3);
    REQUIRE(syn.corpus.size() == 10);
    auto [tr, va, te] = split_corpus(syn.corpus, 0.8, 0.1, 0.1, 7);
    CHECK(tr.size() == 8);
    CHECK(va.size() == 1);
    CHECK(te.size() == 1);

    std::set<std::string> ids;
    for (const auto* c : {&tr, &va, &te})
        for (const auto& r : c->records) ids.insert(r.id);
    CHECK(ids.size() == 10);  // disjoint union
    CHECK(tr.vocab == syn.corpus.vocab);

    auto [tr2, va2, te2] = split_corpus(syn.corpus, 0.8, 0.1, 0.1, 7);
    CHECK(tr.records == tr2.records);
    CHECK(va.records == va2.records);
    CHECK(te.records == te2.records);
}

TEST_CASE("split_corpus rejects degenerate splits") {
    auto syn = generate_synthetic(2, 5, 4, 4, 0.0, 3);
    CHECK_THROWS_AS(split_corpus(syn.corpus, 1.0, 0.0, 0.0, 1), ContractError);
    CHECK_THROWS_AS(split_corpus(syn.corpus, 0.98, 0.01, 0.01, 1), ContractError);
    CHECK_THROWS_AS(split_corpus(syn.corpus, 0.5, 0.4, 0.3, 1), ContractError);
}

TEST_CASE("generate_synthetic zero noise keeps tags inside the cluster pool") {
    auto syn = generate_synthetic(3, 100, 10, 16, 0.0, 1);
    CHECK(syn.corpus.size() == 300);
    CHECK(syn.corpus.vocab.size() == 30);
    for (std::size_t i = 0; i < syn.corpus.size(); ++i) {
        const auto& pool = syn.cluster_tags[syn.cluster_of_record[i]];
        std::set<int> pool_set(pool.begin(), pool.end());
        for (int t : syn.corpus.records[i].tag_ids) CHECK(pool_set.count(t) == 1);
        auto n = syn.corpus.records[i].tag_ids.size();
        CHECK(n >= 3);
        CHECK(n <= 10);
    }
    CHECK(syn.noise_tag_count == 0);
}

TEST_CASE("generate_synthetic noise rate shows up at the configured frequency") {
    auto syn = generate_synthetic(3, 200, 10, 16, 0.3, 5);
    std::int64_t cross = 0, total = 0;
    for (std::size_t i = 0; i < syn.corpus.size(); ++i) {
        const auto& pool = syn.cluster_tags[syn.cluster_of_record[i]];
        std::set<int> pool_set(pool.begin(), pool.end());
        for (int t : syn.corpus.records[i].tag_ids) {
            ++total;
            if (!pool_set.count(t)) ++cross;
        }
    }
    double frac = static_cast<double>(cross) / total;
    CHECK(frac == doctest::Approx(0.3).epsilon(0.17));  // 0.3 +- 0.05
    CHECK(cross == syn.noise_tag_count);
    CHECK(total == syn.total_tag_count);
}

TEST_CASE("generate_synthetic is deterministic and validates dimensions") {
    auto a = generate_synthetic(3, 10, 5, 8, 0.2, 42);
    auto b = generate_synthetic(3, 10, 5, 8, 0.2, 42);
    CHECK(a.corpus == b.corpus);
    CHECK_THROWS_AS(generate_synthetic(5, 10, 5, 2, 0.0, 1), ContractError);
    CHECK_THROWS_AS(generate_synthetic(1, 1, 1, 1, 1.0, 1), ContractError);
}

TEST_CASE("generate_synthetic centroids are separated") {
    auto syn = generate_synthetic(4, 1, 3, 16, 0.0, 9);
    // With noise sigma 0.08 and orthonormal centroids, features from
    // different clusters stay nearly orthogonal.
    for (std::size_t i = 0; i < syn.corpus.size(); ++i)
        for (std::size_t j = i + 1; j < syn.corpus.size(); ++j) {
            double d = dot(syn.corpus.records[i].features, syn.corpus.records[j].features);
            CHECK(std::abs(d) < 0.5);
        }
}

TEST_CASE("tag_distribution normalizes frequencies") {
    Corpus c;
    c.vocab.tokens = {"a", "b"};
    c.vocab.frequencies = {3, 1};
    c.vocab.index = {{"a", 0}, {"b", 1}};
    c.records.push_back({"i", {1.0}, {0}});
    auto p = tag_distribution(c);
    CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));

    c.vocab.tokens = {"a", "b", "c"};
    c.vocab.frequencies = {7, 2, 1};
    auto q = tag_distribution(c);
    CHECK(q[0] == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(q[1] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(q[2] == doctest::Approx(0.1).epsilon(1e-15));

    c.vocab.frequencies = {5, 5, 5};
    for (double v : tag_distribution(c)) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-15));
}

TEST_CASE("tag_distribution is a probability vector on generated corpora") {
    for (std::uint64_t seed : {1, 2, 3}) {
        auto syn = generate_synthetic(3, 30, 8, 8, 0.25, seed);
        auto p = tag_distribution(syn.corpus);
        double sum = std::accumulate(p.begin(), p.end(), 0.0);
        CHECK(std::abs(sum - 1.0) <= 1e-12);
        for (double v : p) CHECK(v >= 0.0);
    }
}

TEST_CASE("no retained record references a pruned id") {
    TempDir tmp;
    auto feats = tmp.file("f.tsv", "i1\t1.0\ni2\t2.0\ni3\t3.0\n");
    auto tags = tmp.file("t.tsv", "i1\tcommon rare1\ni2\tcommon rare2\ni3\tcommon\n");
    auto c = load_corpus(feats, tags, 2, 100);
    for (const auto& r : c.records)
        for (int t : r.tag_ids) {
            CHECK(t >= 0);
            CHECK(t < c.vocab.size());
        }
}
