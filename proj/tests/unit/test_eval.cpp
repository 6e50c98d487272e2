#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>
#include <random>

#include "eqa/error.hpp"
#include "eqa/eval.hpp"
#include "oracles.hpp"

using namespace eqa;

namespace {

double boost_two_tailed(double t, double df)
{
    boost::math::students_t dist(df);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

}  // namespace

TEST_CASE("paired t-test on a worked case")
{
    std::vector<int> a{1, 0, 1, 0, 1, 0, 1, 1};
    std::vector<int> b(8, 0);
    auto r = paired_ttest(a, b);
    CHECK(r.t == doctest::Approx(3.4157).epsilon(1e-4));
    CHECK(r.p == doctest::Approx(0.0112).epsilon(0.02));
    CHECK(r.p == doctest::Approx(boost_two_tailed(r.t, 7)).epsilon(1e-8));
    auto flipped = paired_ttest(b, a);
    CHECK(flipped.t == -r.t);
    CHECK(flipped.p == r.p);
}

TEST_CASE("t-test edge cases")
{
    std::vector<int> same{1, 0, 1, 1};
    auto r = paired_ttest(same, same);
    CHECK(r.t == 0.0);
    CHECK(r.p == 1.0);
    std::vector<int> ones(4, 1);
    std::vector<int> zeros(4, 0);
    auto all = paired_ttest(ones, zeros);
    CHECK(all.p == 0.0);
    CHECK(std::isinf(all.t));
    CHECK_THROWS_AS(paired_ttest(std::vector<int>{1}, std::vector<int>{0}), Error);
    CHECK_THROWS_AS(paired_ttest(std::vector<int>{1, 0}, std::vector<int>{0}), Error);
}

TEST_CASE("student t tail matches boost")
{
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> t(-8.0, 8.0);
    for (int i = 0; i < 300; ++i) {
        const double df = 1.0 + static_cast<double>(rng() % 60);
        const double x = t(rng);
        CHECK(student_t_two_tailed(x, df) == doctest::Approx(boost_two_tailed(x, df)).epsilon(1e-8));
    }
    CHECK(student_t_two_tailed(0.0, 5) == doctest::Approx(1.0));
}

TEST_CASE("incomplete beta")
{
    CHECK(incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3));
    CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
    CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
    CHECK(incomplete_beta(2, 3, 0.4) == doctest::Approx(1.0 - incomplete_beta(3, 2, 0.6)).epsilon(1e-10));
}

TEST_CASE("ablation names")
{
    std::vector<std::string> names{"z2", "K"};
    auto m = parse_ablation(names);
    CHECK(m.zeroed[1]);
    CHECK(m.no_knowledge);
    CHECK(ablation_label(m) == "-z2+K");
    CHECK(ablation_label(FeatureMask{}) == "full");
    std::vector<std::string> bad{"z7"};
    CHECK_THROWS_AS(parse_ablation(bad), Error);
    auto six = one_by_one_ablations();
    REQUIRE(six.size() == 6);
    std::vector<std::string> labels;
    for (const auto& s : six) {
        labels.push_back(ablation_label(s));
    }
    CHECK(labels == std::vector<std::string>{"-z1", "-z2", "-z3", "-z4", "-z5", "-K"});
}

TEST_CASE("evaluation on the toy fixture")
{
    auto toy = testing::load_toy();
    auto r = testing::toy_resources(toy);
    auto p = testing::processor_for(r, load_rules(testing::data_dir() / "rules" / "default_rules.json"));
    std::mt19937_64 rng(41);
    TrainConfig train;
    train.scheme = TaskScheme::qtype;
    auto m = make_model(FeatureConfig{}, train);
    m.weights = testing::random_weights(rng, m.weights.size());

    auto report = evaluate(m, toy.questions, p, r);
    CHECK(report.n == toy.questions.size());
    std::size_t correct = 0;
    std::size_t per_task = 0;
    for (std::size_t i = 0; i < report.n; ++i) {
        auto h = p.generate_hypotheses(toy.questions[i]);
        auto pred = predict(m, h, r);
        CHECK(report.predicted[i] == pred.index);
        CHECK(report.correct[i] == (pred.index == *toy.questions[i].gold_index ? 1 : 0));
        correct += static_cast<std::size_t>(report.correct[i]);
    }
    for (const auto& [name, tally] : report.per_task) {
        per_task += tally.n;
        CHECK(tally.correct <= tally.n);
    }
    CHECK(per_task == report.n);
    CHECK(report.accuracy == doctest::Approx(static_cast<double>(correct) / report.n));

    PredictOptions four;
    four.threads = 4;
    CHECK(evaluate(m, toy.questions, p, r, four) == report);

    CHECK_THROWS_AS(evaluate(m, std::span<const Question>{}, p, r), Error);

    auto json = nlohmann::json::parse(report_json(std::vector<EvalReport>{report}));
    CHECK(json.at(0).at("n") == report.n);
    auto table = report_table(std::vector<EvalReport>{report});
    CHECK(table.find("accuracy") != std::string::npos);
}

TEST_CASE("masked ablation produces one report per setting")
{
    auto toy = testing::load_toy();
    auto r = testing::toy_resources(toy);
    auto p = testing::processor_for(r);
    std::mt19937_64 rng(42);
    auto m = make_model(FeatureConfig{}, TrainConfig{});
    m.weights = testing::random_weights(rng, m.weights.size());
    std::vector<FeatureMask> settings{FeatureMask{}};
    for (const auto& s : one_by_one_ablations()) {
        settings.push_back(s);
    }
    auto reports = ablate(m, settings, AblationMode::masked, {}, toy.questions, p, r);
    REQUIRE(reports.size() == 7);
    CHECK(reports[0] == [&] {
        auto e = evaluate(m, toy.questions, p, r);
        e.mode = "masked";
        return e;
    }());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CHECK(reports[i].label == ablation_label(settings[i]));
        CHECK(reports[i].mode == "masked");
        CHECK(reports[i].n == toy.questions.size());
    }
}
