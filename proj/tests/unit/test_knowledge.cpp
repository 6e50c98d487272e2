#include <doctest.h>

#include <random>

#include "eqa/error.hpp"
#include "eqa/knowledge.hpp"
#include "oracles.hpp"

using namespace eqa;

namespace {

Unit mwe(const std::string& surface)
{
    return Unit{surface, UnitKind::mwe, {}};
}

Unit tok(const std::string& surface)
{
    return Unit{surface, UnitKind::token, {}};
}

}  // namespace

TEST_CASE("knowledge file entries")
{
    auto store = parse_knowledge(R"({"id":"e1","kind":"equiv","parts":["carbon dioxide","CO2"],"source":"g"}
{"id":"t1","kind":"triple","parts":["greenhouse gases","cause","greenhouse effect"],"source":"g"}
{"id":"t2","kind":"triple","parts":[["big","cat"],"is a","animal"]})");
    REQUIRE(store.size() == 3);
    CHECK(store.at(0).kind == KnowledgeKind::equivalence);
    CHECK(store.at(0).parts[0].front().surface == "carbon dioxide");
    CHECK(store.at(0).parts[0].front().kind == UnitKind::mwe);
    CHECK(store.at(0).parts[1].front().surface == "co2");
    CHECK(store.at(1).kind == KnowledgeKind::triple);
    CHECK(store.units_of(1).size() == 3);
    CHECK(store.at(2).parts[0].size() == 2);
    CHECK(store.find("t2") == 2);
    CHECK_THROWS_AS((void)store.find("zz"), Error);
}

TEST_CASE("knowledge validation")
{
    CHECK_THROWS_AS(parse_knowledge(R"({"id":"a","kind":"triple","parts":["x","y"]})"), Error);
    CHECK_THROWS_AS(parse_knowledge(R"({"id":"a","kind":"equiv","parts":["x",""]})"), Error);
    CHECK_THROWS_AS(parse_knowledge(R"({"id":"a","kind":"other","parts":["x","y"]})"), Error);
    try {
        parse_knowledge(R"({"id":"a","kind":"equiv","parts":["x","y"]}
{"id":"a","kind":"equiv","parts":["x","z"]})");
        FAIL("expected a duplicate id error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::duplicate_id);
    }
}

TEST_CASE("embeddings")
{
    auto t = parse_embeddings("2\ngreenhouse 1 0\ngases 0 1\n");
    CHECK(t.dimension() == 2);
    CHECK(unit_vector(mwe("greenhouse gases"), t) == std::vector<double>{1, 1});
    CHECK(unit_vector(tok("zebra"), t) == std::vector<double>{0, 0});
    CHECK(unit_vector(mwe("greenhouse zebra"), t) == std::vector<double>{1, 0});
    try {
        parse_embeddings("2\na 1 0\nb 1 0 3\n");
        FAIL("expected a dimension error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::dimension);
    }
    EmbeddingTable table(3);
    CHECK_THROWS_AS(table.add("x", {1, 2}), Error);
}

TEST_CASE("mwe vectors are exact sums of word vectors")
{
    std::mt19937_64 rng(4);
    auto t = testing::random_embeddings(rng, 5);
    for (int i = 0; i < 100; ++i) {
        auto text = testing::random_text(rng, 2, 4);
        text.pop_back();
        auto u = mwe(text);
        std::vector<double> expected(5, 0.0);
        for (const auto& w : words_of(u)) {
            auto v = t.lookup(w);
            for (std::size_t k = 0; k < 5; ++k) {
                expected[k] += v[k];
            }
        }
        CHECK(unit_vector(u, t) == expected);
    }
}

TEST_CASE("cosine")
{
    std::vector<double> a{1, 0};
    std::vector<double> b{0, 2};
    std::vector<double> z{0, 0};
    CHECK(cosine(a, a) == doctest::Approx(1.0));
    CHECK(cosine(a, b) == 0.0);
    CHECK(cosine(a, z) == 0.0);
}

TEST_CASE("lexical relations")
{
    auto t = parse_lexical_relations(R"({"a":"hot","b":"cold","rel":"antonymy"}
{"a":"dog","b":"animal","rel":"is_a"}
{"a":"dog","b":"animal","rel":"class_inclusion"})");
    CHECK(t.relations("hot", "cold") == LexicalRelation::antonymy);
    CHECK(t.relations("cold", "hot") == LexicalRelation::antonymy);
    CHECK(t.relations("dog", "animal") == (LexicalRelation::is_a | LexicalRelation::class_inclusion));
    CHECK(t.relations("animal", "dog") == 0);
    CHECK_THROWS_AS(parse_lexical_relations(R"({"a":"x","b":"y","rel":"meronymy"})"), Error);
}

TEST_CASE("knowledge selection")
{
    auto toy = testing::load_toy();
    std::vector<Unit> h{mwe("carbon dioxide"), tok("traps"), tok("heat")};

    SUBCASE("uncovered unit picks the matching bit")
    {
        std::unordered_set<std::string> snippet{"traps", "heat"};
        auto picked = select_knowledge_bits(h, snippet, toy.knowledge);
        REQUIRE(picked.size() == 1);
        CHECK(toy.knowledge.at(picked[0]).id == "k1");
    }
    SUBCASE("fully covered hypothesis selects nothing")
    {
        std::unordered_set<std::string> snippet{"carbon dioxide", "traps", "heat"};
        CHECK(select_knowledge_bits(h, snippet, toy.knowledge).empty());
    }
    SUBCASE("top k with ties by id")
    {
        std::vector<KnowledgeBit> bits;
        std::vector<Unit> hyp;
        for (int i = 6; i >= 0; --i) {
            auto w = "w" + std::to_string(i);
            bits.push_back(KnowledgeBit{"b" + std::to_string(i), KnowledgeKind::equivalence, {{tok(w)}, {tok("x")}}, ""});
            hyp.push_back(tok(w));
        }
        KnowledgeStore store(bits);
        auto picked = select_knowledge_bits(hyp, {}, store, 5);
        REQUIRE(picked.size() == 5);
        for (std::size_t i = 0; i < 5; ++i) {
            CHECK(store.at(picked[i]).id == "b" + std::to_string(i));
        }
        CHECK(select_knowledge_bits(hyp, {}, store, 0).empty());
    }
    SUBCASE("higher overlap ranks first")
    {
        KnowledgeStore store({KnowledgeBit{"a", KnowledgeKind::equivalence, {{tok("p")}, {tok("z")}}, ""},
                              KnowledgeBit{"b", KnowledgeKind::triple, {{tok("p")}, {tok("q")}, {tok("r")}}, ""}});
        auto picked = select_knowledge_bits(std::vector<Unit>{tok("p"), tok("q")}, {}, store, 5);
        REQUIRE(picked.size() == 2);
        CHECK(store.at(picked[0]).id == "b");
    }
}

TEST_CASE("selection never exceeds k and always overlaps")
{
    std::mt19937_64 rng(6);
    for (int i = 0; i < 200; ++i) {
        auto store = testing::random_knowledge(rng, 12);
        auto h = testing::random_hypothesis(rng, 1, 8);
        std::unordered_set<std::string> snippet;
        for (const auto& u : testing::random_hypothesis(rng, 0, 4).units) {
            snippet.insert(u.surface);
        }
        const std::size_t k = i % 7;
        auto picked = select_knowledge_bits(h.units, snippet, store, k);
        CHECK(picked.size() <= k);
        for (auto b : picked) {
            bool overlaps = false;
            for (const auto& ku : store.units_of(b)) {
                for (const auto& hu : h.units) {
                    overlaps = overlaps || (ku.surface == hu.surface && !snippet.contains(hu.surface));
                }
            }
            CHECK(overlaps);
        }
    }
}
