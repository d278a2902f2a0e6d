#include "summrec/topics/topics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "summrec/common/error.hpp"
#include "summrec/common/rng.hpp"

namespace summrec::topics {

namespace {

using Point = std::vector<double>;

double squared_distance(const Point& a, const Point& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

std::vector<Point> normalized(std::span<const embed::EmbeddingVector> vectors) {
    std::vector<Point> points;
    points.reserve(vectors.size());
    for (const auto& v : vectors) {
        Point p = v.values;
        const double n = embed::euclidean_norm(p);
        if (n > 0.0) {
            for (double& x : p) x /= n;
        }
        points.push_back(std::move(p));
    }
    return points;
}

std::vector<Point> seed_plus_plus(const std::vector<Point>& points, std::size_t k, Rng& rng) {
    std::vector<Point> centroids;
    centroids.push_back(points[rng.below(points.size())]);
    std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
            total += nearest[i];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double acc = 0.0;
            pick = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                acc += nearest[i];
                if (target < acc && nearest[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = rng.below(points.size());
        }
        centroids.push_back(points[pick]);
    }
    return centroids;
}

}  // namespace

KMeansResult kmeans(std::span<const embed::EmbeddingVector> vectors, std::size_t k, std::uint64_t seed) {
    require(k >= 1, "k must be positive");
    require(k <= vectors.size(), "k = " + std::to_string(k) + " exceeds " + std::to_string(vectors.size()) + " vectors");
    const std::size_t dim = vectors.front().dimension();
    for (const auto& v : vectors) require(v.dimension() == dim, "vectors differ in dimension");

    const std::vector<Point> points = normalized(vectors);
    Rng rng(seed);
    std::vector<Point> centroids = seed_plus_plus(points, k, rng);

    KMeansResult result;
    result.assignment.assign(points.size(), 0);
    for (int iter = 0; iter < kMaxIterations; ++iter) {
        double objective = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            int best = 0;
            double best_d = squared_distance(points[i], centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(points[i], centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            result.assignment[i] = best;
            objective += best_d;
        }
        result.objective.push_back(objective);
        result.iterations = iter + 1;

        std::vector<Point> sums(k, Point(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(result.assignment[i]);
            ++counts[c];
            for (std::size_t d = 0; d < dim; ++d) sums[c][d] += points[i][d];
        }
        double shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (double& x : sums[c]) x /= static_cast<double>(counts[c]);
            shift = std::max(shift, std::sqrt(squared_distance(sums[c], centroids[c])));
            centroids[c] = std::move(sums[c]);
        }
        if (shift <= kTolerance) break;
    }
    return result;
}

std::vector<int> kmeans_cluster(std::span<const embed::EmbeddingVector> vectors, std::size_t k, std::uint64_t seed) {
    return kmeans(vectors, k, seed).assignment;
}

std::map<int, std::vector<Keyword>> ctfidf_keywords(const std::map<int, std::vector<preprocess::StemBag>>& clusters,
                                                     std::size_t top_n) {
    std::map<int, preprocess::StemBag> per_class;
    std::map<std::string, double> total;
    double tokens = 0.0;
    for (const auto& [id, bags] : clusters) {
        require(!bags.empty(), "cluster " + std::to_string(id) + " is empty");
        auto& merged = per_class[id];
        for (const auto& bag : bags) {
            for (const auto& [stem, n] : bag) {
                merged[stem] += n;
                total[stem] += n;
                tokens += n;
            }
        }
    }
    const double average = clusters.empty() ? 0.0 : tokens / static_cast<double>(clusters.size());

    std::map<int, std::vector<Keyword>> out;
    for (const auto& [id, bag] : per_class) {
        std::vector<Keyword> scored;
        scored.reserve(bag.size());
        for (const auto& [stem, n] : bag) {
            if (n <= 0) continue;
            scored.emplace_back(stem, n * std::log(1.0 + average / total[stem]));
        }
        const std::size_t keep = std::min(top_n, scored.size());
        std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                          [](const Keyword& a, const Keyword& b) {
                              return a.second != b.second ? a.second > b.second : a.first < b.first;
                          });
        scored.resize(keep);
        out[id] = std::move(scored);
    }
    return out;
}

double average_topic_rating(std::span<const TopicRating> ratings, const std::string& rater_id) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& r : ratings) {
        if (r.rater_id != rater_id) continue;
        require(r.score >= 0 && r.score <= 2, "topic rating must be 0, 1 or 2");
        sum += r.score;
        ++n;
    }
    require(n > 0, "no ratings from rater " + rater_id);
    return sum / static_cast<double>(n);
}

std::vector<std::string> sample_for_rating(std::span<const Paragraph> paragraphs, std::size_t n, std::uint64_t seed) {
    std::vector<std::string> eligible;
    for (const auto& p : paragraphs) {
        if (p.topic_id) eligible.push_back(p.id);
    }
    require(n <= eligible.size(), "cannot sample " + std::to_string(n) + " of " + std::to_string(eligible.size()) +
                                      " paragraphs with topics");
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::swap(eligible[i], eligible[i + rng.below(eligible.size() - i)]);
    }
    eligible.resize(n);
    return eligible;
}

TopicModel build_topics(const std::map<std::string, preprocess::StemBag>& bags, const embed::EmbeddingSet& embeddings,
                        std::size_t k, std::uint64_t seed, std::size_t top_n) {
    std::vector<std::string> ids;
    std::vector<embed::EmbeddingVector> vectors;
    for (const auto& [id, bag] : bags) {
        if (preprocess::total_count(bag) == 0) continue;
        auto it = embeddings.find(id);
        if (it == embeddings.end()) continue;
        ids.push_back(id);
        vectors.push_back(it->second);
    }
    TopicModel model;
    if (ids.empty()) return model;

    const auto assignment = kmeans_cluster(vectors, std::min(k, ids.size()), seed);
    std::map<int, std::vector<preprocess::StemBag>> clusters;
    std::map<int, std::vector<std::string>> members;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        clusters[assignment[i]].push_back(bags.at(ids[i]));
        members[assignment[i]].push_back(ids[i]);
    }
    auto keywords = ctfidf_keywords(clusters, top_n);
    for (auto& [cluster, member_ids] : members) {
        for (const auto& id : member_ids) model.topic_of[id] = cluster;
        model.topics.push_back({cluster, std::move(keywords[cluster]), std::move(member_ids)});
    }
    return model;
}

std::string export_topics_jsonl(std::span<const Topic> topics) {
    std::string out;
    for (const auto& t : topics) {
        nlohmann::json kw = nlohmann::json::array();
        for (const auto& [stem, weight] : t.keywords) kw.push_back({stem, weight});
        out += nlohmann::json{{"id", t.id}, {"keywords", kw}, {"members", t.member_ids.size()}}.dump();
        out += '\n';
    }
    return out;
}

}  // namespace summrec::topics
