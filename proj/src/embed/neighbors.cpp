#include "summrec/embed/neighbors.hpp"

#include <algorithm>

#include "summrec/common/error.hpp"

namespace summrec::embed {

std::vector<Neighbor> nearest_neighbors(const std::string& query_id, std::size_t k, const EmbeddingSet& pool) {
    require(k >= 1, "k must be positive");
    const auto query = pool.find(query_id);
    if (query == pool.end()) throw PreconditionError("paragraph " + query_id + " has no embedding");

    std::vector<Neighbor> ranked;
    ranked.reserve(pool.size());
    for (const auto& [id, vec] : pool) {
        if (id == query_id) continue;
        require(vec.provider_id == query->second.provider_id, "embedding pool mixes providers");
        ranked.push_back({id, cosine(query->second, vec)});
    }
    auto order = [](const Neighbor& a, const Neighbor& b) {
        return a.similarity != b.similarity ? a.similarity > b.similarity : a.id < b.id;
    };
    const std::size_t keep = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), order);
    ranked.resize(keep);
    return ranked;
}

}  // namespace summrec::embed
