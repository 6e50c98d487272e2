#include <doctest.h>

#include <cmath>
#include <random>

#include "eqa/error.hpp"
#include "eqa/index.hpp"
#include "oracles.hpp"

using namespace eqa;

namespace {

Curriculum two_docs(const std::string& a, const std::string& b)
{
    auto json = R"({"textbooks":[{"id":"t","chapters":[{"id":"c","sections":[
        {"id":"A","sentences":[{"id":"a","text":")" + a + R"("}]},
        {"id":"B","sentences":[{"id":"b","text":")" + b + R"("}]}]}]}]})";
    return parse_corpus(json);
}

}  // namespace

TEST_CASE("toy index shapes")
{
    auto toy = testing::load_toy();
    auto chapters = build_index(toy.corpus, Granularity::chapter);
    CHECK(chapters.n_docs() == 2);
    auto books = build_index(toy.corpus, Granularity::textbook);
    CHECK(books.n_docs() == 1);
    CHECK(books.doc_lengths[0] == toy.corpus.unit_count());
    auto sections = build_index(toy.corpus, Granularity::section);
    CHECK(sections.n_docs() == 4);
    const auto& p = sections.postings.at("greenhouse gases");
    REQUIRE(p.size() == 1);
    CHECK(sections.doc_ids[p[0].doc] == "tb1/ch1/greenhouse");
    CHECK(sections.doc_index("tb1/ch2/behavior") == 3);
    CHECK_THROWS_AS((void)sections.doc_index("nope"), Error);
}

TEST_CASE("index invariants on random corpora")
{
    std::mt19937_64 rng(3);
    for (int i = 0; i < 30; ++i) {
        auto c = testing::random_curriculum(rng);
        for (auto g : {Granularity::textbook, Granularity::chapter, Granularity::section}) {
            auto idx = build_index(c, g);
            std::size_t total = 0;
            for (auto l : idx.doc_lengths) {
                total += l;
            }
            CHECK(total == c.unit_count());
            CHECK(idx.avg_doc_length == doctest::Approx(static_cast<double>(total) / idx.n_docs()));
            for (const auto& [term, postings] : idx.postings) {
                for (std::size_t k = 0; k < postings.size(); ++k) {
                    CHECK(postings[k].tf >= 1);
                    CHECK(postings[k].doc < idx.n_docs());
                    if (k > 0) {
                        CHECK(postings[k - 1].doc < postings[k].doc);
                    }
                }
            }
        }
    }
}

TEST_CASE("tf-idf")
{
    auto c = two_docs("dog dog dog cat", "cat bird");
    auto idx = build_index(c, Granularity::section);
    auto q = tokenize("dog");
    CHECK(tfidf_score(idx, q, "t/c/A") == doctest::Approx(3 * std::log(2.0)).epsilon(1e-12));
    CHECK(tfidf_score(idx, q, "t/c/A") == doctest::Approx(2.0794).epsilon(1e-4));
    CHECK(tfidf_score(idx, tokenize("cat"), "t/c/A") == 0.0);
    CHECK(tfidf_score(idx, {}, "t/c/A") == 0.0);
    CHECK(tfidf_score(idx, tokenize("zebra"), "t/c/B") == 0.0);
    CHECK_THROWS_AS(tfidf_score(idx, q, "t/c/Z"), Error);
}

TEST_CASE("bm25")
{
    auto c = two_docs("dog dog cat", "bird fish");
    auto idx = build_index(c, Granularity::section);
    CHECK(bm25_score(idx, tokenize("zebra"), "t/c/A") == 0.0);
    CHECK(bm25_score(idx, tokenize("bird"), "t/c/A") == 0.0);

    SUBCASE("single document, tf 1, length equals the average")
    {
        auto one = parse_corpus(
            R"({"textbooks":[{"id":"t","chapters":[{"id":"c","sections":[{"id":"A","sentences":[{"id":"a","text":"sun"}]}]}]}]})");
        auto i1 = build_index(one, Granularity::section);
        // idf = ln(0.5/1.5 + 1); tf part = 1 * 2.2 / (1 + 1.2) = 1.
        CHECK(bm25_score(i1, tokenize("sun"), std::size_t{0}) == doctest::Approx(std::log(1.0 / 3.0 + 1.0)).epsilon(1e-14));
    }
    SUBCASE("b = 0 ignores length")
    {
        auto c2 = two_docs("dog cat cat cat cat", "dog fish");
        auto i2 = build_index(c2, Granularity::section);
        Bm25Params p{1.2, 0.0};
        CHECK(bm25_score(i2, tokenize("dog"), "t/c/A", p) == bm25_score(i2, tokenize("dog"), "t/c/B", p));
        CHECK(bm25_score(i2, tokenize("dog"), "t/c/A") < bm25_score(i2, tokenize("dog"), "t/c/B"));
    }
    SUBCASE("bad parameters")
    {
        CHECK_THROWS_AS(bm25_score(idx, tokenize("dog"), "t/c/A", Bm25Params{0.0, 0.5}), Error);
        CHECK_THROWS_AS(bm25_score(idx, tokenize("dog"), "t/c/A", Bm25Params{1.2, 1.5}), Error);
    }
}

TEST_CASE("scores match the scalar oracle")
{
    std::mt19937_64 rng(21);
    for (int i = 0; i < 20; ++i) {
        auto c = testing::random_curriculum(rng, {2, 2, 2, 3, false});
        for (auto g : {Granularity::textbook, Granularity::chapter, Granularity::section}) {
            auto idx = build_index(c, g);
            auto docs = testing::documents(c, g);
            auto h = testing::random_hypothesis(rng);
            std::vector<std::string> q;
            for (const auto& u : h.units) {
                q.push_back(u.surface);
            }
            for (std::size_t d = 0; d < docs.size(); ++d) {
                CHECK(std::abs(tfidf_score(idx, h.units, d) - testing::oracle_tfidf(docs, q, d)) <= 1e-12);
                CHECK(std::abs(bm25_score(idx, h.units, d) - testing::oracle_bm25(docs, q, d)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("scores are non-decreasing in term frequency")
{
    for (int tf = 1; tf < 6; ++tf) {
        std::string a;
        for (int k = 0; k < tf; ++k) {
            a += "dog ";
        }
        auto lo = two_docs(a + "cat", "cat bird");
        auto hi = two_docs(a + "dog cat", "cat bird");
        auto il = build_index(lo, Granularity::section);
        auto ih = build_index(hi, Granularity::section);
        CHECK(tfidf_score(ih, tokenize("dog"), "t/c/A") >= tfidf_score(il, tokenize("dog"), "t/c/A"));
        CHECK(bm25_score(ih, tokenize("dog"), "t/c/A") >= bm25_score(il, tokenize("dog"), "t/c/A"));
    }
}

TEST_CASE("n-gram jaccard")
{
    auto x = tokenize("x y z");
    auto y = tokenize("y z w");
    CHECK(ngram_jaccard(x, y, 2) == doctest::Approx(1.0 / 3.0));
    CHECK(ngram_jaccard(x, x, 2) == 1.0);
    CHECK(ngram_jaccard(x, x, 3) == 1.0);
    CHECK(ngram_jaccard(tokenize("x"), x, 2) == 0.0);
    CHECK(ngram_jaccard(tokenize("x"), tokenize("y"), 2) == 0.0);
    CHECK_THROWS_AS(ngram_jaccard(x, y, 4), Error);

    std::vector<CharSpan> spans{{0, 16}};
    auto g = ngrams(tokenize("greenhouse gases cause warming", spans), 2);
    CHECK(g.contains(std::string("greenhouse gases") + '\x1f' + "cause"));
}

TEST_CASE("index cache round trip and invalidation")
{
    auto toy = testing::load_toy();
    auto dir = testing::scratch_dir("index_cache");
    auto indices = build_indices(toy.corpus);
    const auto hash = content_hash(toy.corpus);
    save_index_cache(indices, hash, dir / "index.json");
    auto loaded = load_index_cache(dir / "index.json", hash);
    REQUIRE(loaded);
    CHECK(loaded->section == indices.section);
    CHECK(loaded->chapter == indices.chapter);
    CHECK(loaded->textbook == indices.textbook);
    CHECK_FALSE(load_index_cache(dir / "index.json", hash + 1));
    CHECK_FALSE(load_index_cache(dir / "missing.json", hash));
}
