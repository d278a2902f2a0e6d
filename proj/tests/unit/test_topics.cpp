#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <set>
#include <sstream>

#include "summrec/common/error.hpp"
#include "summrec/common/rng.hpp"
#include "summrec/topics/topics.hpp"

using namespace summrec;
using namespace summrec::topics;
using embed::EmbeddingVector;

namespace {

std::vector<EmbeddingVector> two_groups(std::size_t per_group) {
    std::vector<EmbeddingVector> v;
    for (std::size_t i = 0; i < per_group; ++i) v.push_back(EmbeddingVector::make({1.0, 0.0, 0.2}, "t"));
    for (std::size_t i = 0; i < per_group; ++i) v.push_back(EmbeddingVector::make({0.0, 1.0, -0.3}, "t"));
    return v;
}

std::vector<Paragraph> topical(std::size_t n) {
    std::vector<Paragraph> ps(n);
    for (std::size_t i = 0; i < n; ++i) {
        ps[i].id = "p" + std::to_string(i);
        ps[i].topic_id = static_cast<int>(i % 3);
    }
    return ps;
}

}  // namespace

TEST_CASE("kmeans examples") {
    const auto v = two_groups(5);
    const auto a = kmeans_cluster(v, 2, 1);
    for (std::size_t i = 1; i < 5; ++i) CHECK(a[i] == a[0]);
    for (std::size_t i = 6; i < 10; ++i) CHECK(a[i] == a[5]);
    CHECK(a[0] != a[5]);
    const auto one = kmeans_cluster(v, 1, 1);
    CHECK(std::all_of(one.begin(), one.end(), [](int c) { return c == 0; }));
    CHECK(kmeans_cluster(v, 2, 99) == kmeans_cluster(v, 2, 99));
    CHECK_THROWS_AS(kmeans_cluster(v, 11, 1), PreconditionError);
    CHECK_THROWS_AS(kmeans_cluster(v, 0, 1), PreconditionError);
}

TEST_CASE("kmeans objective never increases") {
    Rng rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<EmbeddingVector> v;
        const std::size_t n = 20 + rng.below(60);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> x(5);
            for (auto& c : x) c = rng.uniform(-1.0, 1.0);
            v.push_back(EmbeddingVector::make(x, "t"));
        }
        const auto result = kmeans(v, 1 + rng.below(8), rng.next());
        CHECK(result.assignment.size() == n);
        REQUIRE_FALSE(result.objective.empty());
        CHECK(result.iterations <= kMaxIterations);
        for (std::size_t i = 1; i < result.objective.size(); ++i) {
            CHECK(result.objective[i] <= result.objective[i - 1] + 1e-12);
        }
    }
}

TEST_CASE("ctfidf hand example") {
    const std::map<int, std::vector<preprocess::StemBag>> clusters{
        {1, {{{"apple", 2}, {"banana", 1}}}},
        {2, {{{"banana", 1}, {"cherry", 1}}}},
    };
    const auto kw = ctfidf_keywords(clusters, 3);
    REQUIRE(kw.at(1).size() == 2);
    CHECK(kw.at(1)[0].first == "apple");
    CHECK(std::abs(kw.at(1)[0].second - 2.0 * std::log(2.25)) <= 1e-9);
    CHECK(std::abs(kw.at(1)[0].second - 1.6219) <= 1e-4);
    CHECK(std::abs(kw.at(1)[1].second - std::log(1.0 + 2.5 / 2.0)) <= 1e-9);
    CHECK(kw.at(2)[0].first == "cherry");
    CHECK(std::abs(kw.at(2)[0].second - std::log(3.5)) <= 1e-9);
    CHECK(kw.at(2)[1].first == "banana");
    CHECK(kw.at(1)[1].second == kw.at(2)[1].second);
    for (const auto& [c, words] : kw) {
        for (const auto& [stem, w] : words) CHECK(w > 0.0);
    }
}

TEST_CASE("ctfidf trivial cases") {
    const auto single = ctfidf_keywords({{0, {{{"herit", 3}}}}}, 1);
    REQUIRE(single.at(0).size() == 1);
    CHECK(single.at(0)[0].first == "herit");
    const auto symmetric = ctfidf_keywords({{0, {{{"x", 2}, {"a", 1}}}}, {1, {{{"x", 2}, {"b", 5}}}}}, 3);
    double wx0 = 0, wx1 = 0;
    for (const auto& [s, w] : symmetric.at(0)) if (s == "x") wx0 = w;
    for (const auto& [s, w] : symmetric.at(1)) if (s == "x") wx1 = w;
    CHECK(wx0 == wx1);
    CHECK_THROWS_AS(ctfidf_keywords({{0, {}}}, 1), PreconditionError);
}

TEST_CASE("average topic rating") {
    auto ratings = [](std::vector<int> scores, const std::string& rater) {
        std::vector<TopicRating> out;
        for (std::size_t i = 0; i < scores.size(); ++i) out.push_back({"p" + std::to_string(i), rater, scores[i]});
        return out;
    };
    CHECK(average_topic_rating(ratings({2, 2, 1, 1}, "r1"), "r1") == 1.5);
    CHECK(average_topic_rating(ratings({2, 2, 2}, "r1"), "r1") == 2.0);
    auto mixed = ratings({0, 2}, "r1");
    mixed.push_back({"p9", "r2", 1});
    CHECK(average_topic_rating(mixed, "r1") == 1.0);
    CHECK(average_topic_rating(mixed, "r2") == 1.0);
    CHECK_THROWS_AS(average_topic_rating(mixed, "r3"), PreconditionError);
    CHECK_THROWS_AS(average_topic_rating(ratings({3}, "r1"), "r1"), PreconditionError);
}

TEST_CASE("sample_for_rating contracts") {
    auto ps = topical(12);
    ps[4].topic_id.reset();
    const auto all = sample_for_rating(ps, 11, 3);
    std::set<std::string> ids(all.begin(), all.end());
    CHECK(ids.size() == 11);
    CHECK_FALSE(ids.count("p4"));
    CHECK(sample_for_rating(ps, 5, 8) == sample_for_rating(ps, 5, 8));
    CHECK_THROWS_AS(sample_for_rating(ps, 12, 0), PreconditionError);
}

TEST_CASE("sample_for_rating is uniform") {
    const auto ps = topical(10);
    const std::size_t n = 3, seeds = 10000;
    std::map<std::string, std::size_t> hits;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        for (const auto& id : sample_for_rating(ps, n, seed)) ++hits[id];
    }
    const double p = static_cast<double>(n) / 10.0;
    const double mean = p * seeds, sigma = std::sqrt(seeds * p * (1.0 - p));
    for (const auto& q : ps) {
        CHECK_MESSAGE(std::abs(static_cast<double>(hits[q.id]) - mean) <= 3.0 * sigma, q.id << " " << hits[q.id]);
    }
}

TEST_CASE("build_topics skips empty bags and exports jsonl") {
    std::map<std::string, preprocess::StemBag> bags{
        {"a", {{"herit", 2}, {"zone", 1}}}, {"b", {{"herit", 1}, {"buffer", 1}}},
        {"c", {{"budget", 3}}},            {"d", {}},
    };
    embed::EmbeddingSet embeddings{
        {"a", EmbeddingVector::make({1.0, 0.1}, "t")},
        {"b", EmbeddingVector::make({1.0, 0.0}, "t")},
        {"c", EmbeddingVector::make({0.0, 1.0}, "t")},
        {"d", EmbeddingVector::make({0.5, 0.5}, "t")},
    };
    const auto model = build_topics(bags, embeddings, 2, 1, 5);
    CHECK(model.topics.size() == 2);
    CHECK_FALSE(model.topic_of.count("d"));
    CHECK(model.topic_of.at("a") == model.topic_of.at("b"));
    CHECK(model.topic_of.at("a") != model.topic_of.at("c"));
    for (const auto& t : model.topics) {
        CHECK_FALSE(t.member_ids.empty());
        for (std::size_t i = 1; i < t.keywords.size(); ++i) CHECK(t.keywords[i - 1].second >= t.keywords[i].second);
    }
    const auto capped = build_topics(bags, embeddings, 50, 1, 5);
    CHECK(capped.topic_of.size() == 3);

    std::istringstream lines(export_topics_jsonl(model.topics));
    std::string line;
    std::size_t count = 0;
    while (std::getline(lines, line)) {
        const auto j = nlohmann::json::parse(line);
        CHECK(j.contains("id"));
        CHECK(j.at("keywords").is_array());
        CHECK(j.at("members").get<std::size_t>() >= 1);
        ++count;
    }
    CHECK(count == model.topics.size());
}
