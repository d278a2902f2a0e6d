#include <doctest.h>

#include <set>

#include "summrec/annotation/annotation.hpp"
#include "summrec/common/error.hpp"
#include "summrec/common/rng.hpp"
#include "support/support.hpp"

using namespace summrec;
using namespace summrec::annotation;
namespace st = summrec::testing;

namespace {

AnnotationLabel label(const std::string& id, const std::string& who, int value,
                      Stage stage = Stage::Initial, const std::string& ts = "2024-01-01T00:00:00Z") {
    return {id, who, value, stage, ts};
}

}  // namespace

TEST_CASE("kappa examples") {
    const std::vector<int> both{1, 0, 1, 1, 0};
    CHECK(cohen_kappa(both, both) == 1.0);
    CHECK(cohen_kappa(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 0, 0}) == 0.5);
    CHECK(cohen_kappa(std::vector<int>{1, 1, 1}, std::vector<int>{0, 0, 0}) == 0.0);
    CHECK(cohen_kappa(std::vector<int>{1, 1}, std::vector<int>{1, 1}) == 1.0);
    CHECK_THROWS_AS(cohen_kappa(std::vector<int>{1}, std::vector<int>{1, 0}), PreconditionError);
    CHECK_THROWS_AS(cohen_kappa(std::vector<int>{}, std::vector<int>{}), PreconditionError);
    CHECK_THROWS_AS(cohen_kappa(std::vector<int>{2}, std::vector<int>{1}), PreconditionError);
}

TEST_CASE("kappa is symmetric and bounded") {
    Rng rng(1);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<int> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.below(2));
            b[i] = static_cast<int>(rng.below(2));
        }
        const double k = cohen_kappa(a, b);
        CHECK(k == cohen_kappa(b, a));
        CHECK(k >= -1.0);
        CHECK(k <= 1.0);
    }
}

TEST_CASE("select_uncertain examples") {
    const std::map<std::string, double> scores{{"a", 0.9}, {"b", 0.51}, {"c", 0.1}, {"d", 0.49}, {"e", 0.50}};
    CHECK(select_uncertain(scores, 3) == std::vector<std::string>{"e", "b", "d"});
    CHECK(select_uncertain(scores, 20).size() == 5);
    CHECK(select_uncertain({}, 20).empty());
    CHECK(select_uncertain(scores, 1, 0.9) == std::vector<std::string>{"a"});
    CHECK_THROWS_AS(select_uncertain({{"x", 1.5}}, 1), PreconditionError);
}

TEST_CASE("effective labels") {
    const std::vector<AnnotationLabel> agree{label("p", "a", 1), label("p", "b", 1)};
    CHECK(effective_label(agree) == 1);
    const std::vector<AnnotationLabel> conflict{label("p", "a", 1), label("p", "b", 0)};
    CHECK_FALSE(effective_label(conflict).has_value());
    const std::vector<AnnotationLabel> single{label("p", "a", 0)};
    CHECK(effective_label(single) == 0);
    CHECK_FALSE(effective_label({}).has_value());
    auto adjudicated = conflict;
    adjudicated.push_back(label("p", "judge", 1, Stage::Adjudicated));
    CHECK(effective_label(adjudicated) == 1);
}

TEST_CASE("label store upserts per annotator and adjudicates") {
    LabelStore store(std::set<std::string>{"p1", "p2", "p3"});
    store.add(label("p1", "a", 1));
    store.add(label("p1", "b", 0));
    CHECK(store.size() == 2);
    CHECK_FALSE(store.effective("p1").has_value());
    store.add(label("p1", "b", 1, Stage::ActiveLearning, "2024-01-02T00:00:00Z"));
    CHECK(store.size() == 2);
    CHECK(store.effective("p1") == 1);

    store.add(label("p2", "a", 1));
    store.add(label("p2", "b", 0));
    store.adjudicate("p2", 1, "judge");
    CHECK(store.effective("p2") == 1);
    CHECK_THROWS_AS(store.adjudicate("p2", 0, "judge"), ConflictError);
    store.revise_adjudication("p2", 0, "judge");
    CHECK(store.effective("p2") == 0);

    store.adjudicate("p1", 1, "judge");
    CHECK(store.effective("p1") == 1);

    store.add(label("p3", "a", 0));
    store.add(label("p3", "b", 0));
    CHECK_THROWS_AS(store.adjudicate("p3", 1, "judge"), PreconditionError);

    CHECK_THROWS_AS(store.adjudicate("nope", 1, "judge"), NotFoundError);
    CHECK_THROWS_AS(store.add(label("nope", "a", 1)), NotFoundError);
    CHECK_THROWS_AS(store.add(label("p3", "a", 1, Stage::Adjudicated)), PreconditionError);
    CHECK_THROWS_AS(store.add(label("p3", "a", 3)), PreconditionError);

    CHECK(store.labelled_ids() == std::set<std::string>{"p1", "p2", "p3"});
    CHECK(store.effective_labels() == std::map<std::string, int>{{"p1", 1}, {"p2", 0}, {"p3", 0}});
}

TEST_CASE("labels csv round trip") {
    LabelStore store(std::set<std::string>{"p1", "p2"});
    store.add(label("p1", "a", 1));
    store.add(label("p1", "b", 0, Stage::ActiveLearning));
    store.adjudicate("p1", 1, "judge");
    store.add(label("p2", "a, the second", 0));
    const std::string csv = store.export_csv();
    CHECK(csv.rfind("paragraph_id,annotator_id,value,stage,timestamp\n", 0) == 0);
    LabelStore copy(std::set<std::string>{"p1", "p2"});
    copy.import_csv(csv);
    CHECK(copy == store);
    CHECK(parse_labels_csv(csv) == store.all());
    CHECK_THROWS_AS(parse_labels_csv("id,annotator,value\n"), ParseError);
    CHECK_THROWS_AS(parse_labels_csv("paragraph_id,annotator_id,value,stage,timestamp\np,a,7,initial,t\n"),
                    ParseError);
}

TEST_CASE("al_round bootstrap, merge and exhaustion") {
    classifier::HeadConfig config;
    config.input_dim = 4;
    config.blocks = 0;
    Rng rng(2);
    const auto params = st::random_params(config, rng);
    const auto pool = st::random_batch(config, 25, rng);

    ALState state;
    state.batch_size = 10;
    auto r0 = al_round(params, pool, state, {}, {});
    CHECK(r0.training.empty());
    CHECK(r0.state.round == 1);
    REQUIRE(r0.state.pending_ids.size() == 10);

    std::map<std::string, int> answers;
    for (const auto& id : r0.state.pending_ids) answers[id] = 1;
    auto r1 = al_round(params, pool, r0.state, answers, r0.training);
    CHECK(r1.training.size() == 10);
    CHECK(r1.state.round == 2);
    REQUIRE(r1.state.pending_ids.size() == 10);
    std::set<std::string> first(r0.state.pending_ids.begin(), r0.state.pending_ids.end());
    for (const auto& id : r1.state.pending_ids) CHECK_FALSE(first.count(id));
    for (const auto& item : r1.training) CHECK(item.label == 1);

    auto partial = answers;
    partial.erase(partial.begin());
    CHECK_THROWS_AS(al_round(params, pool, r0.state, partial, r0.training), PreconditionError);

    std::map<std::string, int> second;
    for (const auto& id : r1.state.pending_ids) second[id] = 0;
    auto r2 = al_round(params, pool, r1.state, second, r1.training);
    CHECK(r2.state.pending_ids.size() == 5);
    std::map<std::string, int> third;
    for (const auto& id : r2.state.pending_ids) third[id] = 0;
    auto r3 = al_round(params, pool, r2.state, third, r2.training);
    CHECK(r3.training.size() == 25);
    CHECK(r3.state.pending_ids.empty());
}
