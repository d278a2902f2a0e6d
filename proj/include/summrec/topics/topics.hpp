#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "summrec/embed/vector.hpp"
#include "summrec/preprocess/preprocess.hpp"
#include "summrec/types.hpp"

namespace summrec::topics {

inline constexpr std::size_t kDefaultTopicCount = 64;
inline constexpr std::size_t kDefaultTopN = 10;
inline constexpr int kMaxIterations = 300;
inline constexpr double kTolerance = 1e-6;

using Keyword = std::pair<std::string, double>;

struct Topic {
    int id = 0;
    std::vector<Keyword> keywords;  // weight descending
    std::vector<std::string> member_ids;

    friend bool operator==(const Topic&, const Topic&) = default;
};

struct TopicRating {
    std::string paragraph_id;
    std::string rater_id;
    int score = 0;  // 0, 1 or 2
};

struct KMeansResult {
    std::vector<int> assignment;
    // Sum of squared distances to the assigned centroid, one entry per
    // assignment step.
    std::vector<double> objective;
    int iterations = 0;
};

// Lloyd's algorithm on L2-normalized copies of the vectors with k-means++
// seeding. Stops when no centroid moves more than kTolerance or after
// kMaxIterations. A cluster that loses all members keeps its centroid.
KMeansResult kmeans(std::span<const embed::EmbeddingVector> vectors, std::size_t k, std::uint64_t seed);

std::vector<int> kmeans_cluster(std::span<const embed::EmbeddingVector> vectors, std::size_t k, std::uint64_t seed);

// W(t,c) = tf(t,c) * ln(1 + A / f(t)), A the mean token count per cluster.
// Returns the top_n stems of each cluster, weight descending then stem
// ascending.
std::map<int, std::vector<Keyword>> ctfidf_keywords(const std::map<int, std::vector<preprocess::StemBag>>& clusters,
                                                     std::size_t top_n = kDefaultTopN);

double average_topic_rating(std::span<const TopicRating> ratings, const std::string& rater_id);

// Uniform sample without replacement of paragraphs that carry a topic.
std::vector<std::string> sample_for_rating(std::span<const Paragraph> paragraphs, std::size_t n, std::uint64_t seed);

struct TopicModel {
    std::vector<Topic> topics;
    std::map<std::string, int> topic_of;  // paragraph id -> topic id
};

// Clusters every paragraph with a non-empty stem bag and an embedding, then
// extracts keywords per cluster. Clusters left empty are dropped; k is capped
// at the number of eligible paragraphs.
TopicModel build_topics(const std::map<std::string, preprocess::StemBag>& bags, const embed::EmbeddingSet& embeddings,
                        std::size_t k, std::uint64_t seed, std::size_t top_n = kDefaultTopN);

// One JSON object per line: {"id", "keywords": [[stem, weight], ...], "members"}.
std::string export_topics_jsonl(std::span<const Topic> topics);

}  // namespace summrec::topics
