#include "summrec/embed/vector.hpp"

#include <cmath>

#include "summrec/common/error.hpp"

namespace summrec::embed {

double euclidean_norm(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::make(std::vector<double> values, std::string provider_id) {
    EmbeddingVector v;
    v.norm = euclidean_norm(values);
    v.values = std::move(values);
    v.provider_id = std::move(provider_id);
    return v;
}

void EmbeddingProvider::validate() const {
    require(!id.empty(), "embedding provider needs an id");
    require(dimension >= 2, "embedding dimension must be >= 2");
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    require(a.dimension() == b.dimension(), "cosine of vectors with different dimensions");
    if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot / (a.norm * b.norm);
}

}  // namespace summrec::embed
