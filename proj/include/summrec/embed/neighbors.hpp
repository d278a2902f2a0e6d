#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "summrec/embed/vector.hpp"

namespace summrec::embed {

inline constexpr std::size_t kDefaultNeighbors = 10;

struct Neighbor {
    std::string id;
    double similarity = 0.0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Exhaustive cosine k-NN over `pool`, excluding the query itself. Sorted by
// similarity descending, then id ascending. Throws PreconditionError when the
// query has no embedding or the pool mixes providers.
std::vector<Neighbor> nearest_neighbors(const std::string& query_id, std::size_t k, const EmbeddingSet& pool);

}  // namespace summrec::embed
