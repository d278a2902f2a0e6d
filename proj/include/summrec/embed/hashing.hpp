#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "summrec/embed/vector.hpp"
#include "summrec/preprocess/preprocess.hpp"

namespace summrec::embed {

// Fixed so that embeddings are identical across runs and platforms.
inline constexpr std::uint64_t kHashSeed = 0x7e4a5d19c3b2f681ULL;
inline constexpr std::size_t kDefaultHashDimension = 512;

using IdfTable = std::map<std::string, double>;

// Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
IdfTable build_idf(std::span<const preprocess::StemBag> bags);

// Stems absent from the table get the idf of a term seen in no document.
double idf_of(const IdfTable& table, const std::string& stem);

// Signed feature hashing: each stem lands in bucket h(stem) mod D with sign
// from an independent bit of the hash, and adds sign * tf * idf there. The
// result is L2-normalized unless it is zero.
EmbeddingVector hash_embed(const preprocess::StemBag& bag, std::size_t dimension, const IdfTable& idf,
                           std::string provider_id = "hashing-tfidf");

}  // namespace summrec::embed
