#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "summrec/classifier/model.hpp"

namespace summrec::service {

struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::filesystem::path store = "store";
    std::string embed_url;  // empty: hashing provider only
    std::string cors_origin = "*";
    std::uint64_t seed = 0;
    std::size_t default_limit = 50;
    std::size_t max_limit = 500;
    classifier::HeadConfig head;  // defaults for training jobs
};

// Applies {"blocks": .., "hidden_dim": .., "dropout_p": .., "pos_weight": ..,
// "learning_rate": .., "weight_decay": .., "epochs": .., "seed": ..,
// "threshold": ..}. Unknown keys and wrong types raise ParseError.
void apply_head_overrides(classifier::HeadConfig& head, std::string_view json_object);

// Reads a JSON object whose keys mirror ServiceConfig fields (head settings
// under "head"). Unknown keys raise ParseError.
ServiceConfig parse_config(std::string_view json_text);

// Defaults, then the file (explicit path, else SUMMREC_CONFIG if set), then
// SUMMREC_PORT, SUMMREC_STORE and SUMMREC_EMBED_URL.
ServiceConfig load_config(const std::optional<std::filesystem::path>& file);

}  // namespace summrec::service
