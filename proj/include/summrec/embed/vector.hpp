#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace summrec::embed {

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;
    double norm = 0.0;  // Euclidean norm of values, kept in sync by make()

    static EmbeddingVector make(std::vector<double> values, std::string provider_id);
    std::size_t dimension() const { return values.size(); }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

enum class ProviderKind { HashingTfidf, ExternalService };

struct EmbeddingProvider {
    std::string id;
    std::size_t dimension = 512;
    ProviderKind kind = ProviderKind::HashingTfidf;

    void validate() const;

    friend bool operator==(const EmbeddingProvider&, const EmbeddingProvider&) = default;
};

// Paragraph id -> vector, all from one provider.
using EmbeddingSet = std::map<std::string, EmbeddingVector>;

double euclidean_norm(std::span<const double> values);

// Cosine similarity; 0 when either vector is zero. Throws PreconditionError on
// a dimension mismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace summrec::embed
