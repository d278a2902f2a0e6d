#include "summrec/embed/hashing.hpp"

#include <cmath>

#include "summrec/common/error.hpp"
#include "summrec/common/hash.hpp"

namespace summrec::embed {

IdfTable build_idf(std::span<const preprocess::StemBag> bags) {
    std::map<std::string, std::size_t> df;
    for (const auto& bag : bags) {
        for (const auto& [stem, _] : bag) ++df[stem];
    }
    const auto n = static_cast<double>(bags.size());
    IdfTable table;
    for (const auto& [stem, count] : df) {
        table[stem] = std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0;
    }
    // Stored under the empty key: idf for unseen stems.
    table[""] = std::log(1.0 + n) + 1.0;
    return table;
}

double idf_of(const IdfTable& table, const std::string& stem) {
    if (auto it = table.find(stem); it != table.end()) return it->second;
    if (auto it = table.find(""); it != table.end()) return it->second;
    return 1.0;
}

EmbeddingVector hash_embed(const preprocess::StemBag& bag, std::size_t dimension, const IdfTable& idf,
                           std::string provider_id) {
    require(dimension >= 2, "hash_embed dimension must be >= 2");
    std::vector<double> values(dimension, 0.0);
    for (const auto& [stem, tf] : bag) {
        const std::uint64_t h = mix64(fnv1a64(stem, kHashSeed));
        const std::size_t index = static_cast<std::size_t>(h % dimension);
        const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
        values[index] += sign * static_cast<double>(tf) * idf_of(idf, stem);
    }
    const double norm = euclidean_norm(values);
    if (norm > 0.0) {
        for (double& v : values) v /= norm;
    }
    return EmbeddingVector::make(std::move(values), std::move(provider_id));
}

}  // namespace summrec::embed
