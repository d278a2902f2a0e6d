#include "summrec/service/config.hpp"

#include <json.hpp>

#include <charconv>
#include <cstdlib>

#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"

namespace summrec::service {

namespace {

using nlohmann::json;

void apply_head(classifier::HeadConfig& h, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "blocks") h.blocks = value.get<std::size_t>();
        else if (key == "hidden_dim") h.hidden_dim = value.get<std::size_t>();
        else if (key == "dropout_p") h.dropout_p = value.get<double>();
        else if (key == "pos_weight") h.pos_weight = value.get<double>();
        else if (key == "learning_rate") h.learning_rate = value.get<double>();
        else if (key == "weight_decay") h.weight_decay = value.get<double>();
        else if (key == "epochs") h.epochs = value.get<int>();
        else if (key == "seed") h.seed = value.get<std::uint64_t>();
        else if (key == "threshold") h.threshold = value.get<double>();
        else throw ParseError("unknown head setting: " + key);
    }
}

}  // namespace

void apply_head_overrides(classifier::HeadConfig& head, std::string_view json_object) {
    try {
        const json j = json_object.empty() ? json::object() : json::parse(json_object);
        if (!j.is_object()) throw ParseError("head settings must be a JSON object");
        apply_head(head, j);
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad head settings: ") + e.what());
    }
}

ServiceConfig parse_config(std::string_view json_text) {
    ServiceConfig c;
    try {
        const json j = json::parse(json_text);
        if (!j.is_object()) throw ParseError("config must be a JSON object");
        for (const auto& [key, value] : j.items()) {
            if (key == "host") c.host = value.get<std::string>();
            else if (key == "port") c.port = value.get<int>();
            else if (key == "store") c.store = value.get<std::string>();
            else if (key == "embed_url") c.embed_url = value.get<std::string>();
            else if (key == "cors_origin") c.cors_origin = value.get<std::string>();
            else if (key == "seed") c.seed = value.get<std::uint64_t>();
            else if (key == "default_limit") c.default_limit = value.get<std::size_t>();
            else if (key == "max_limit") c.max_limit = value.get<std::size_t>();
            else if (key == "head") apply_head(c.head, value);
            else throw ParseError("unknown config key: " + key);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("bad config: ") + e.what());
    }
    c.head.validate();
    return c;
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file) {
    ServiceConfig c;
    std::optional<std::filesystem::path> path = file;
    if (!path) {
        if (const char* env = std::getenv("SUMMREC_CONFIG"); env && *env) path = env;
    }
    if (path) c = parse_config(read_file(*path));
    if (const char* env = std::getenv("SUMMREC_PORT"); env && *env) {
        const std::string_view v(env);
        int port = 0;
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), port);
        if (ec != std::errc{} || ptr != v.data() + v.size() || port < 0 || port > 65535) {
            throw ParseError("SUMMREC_PORT is not a port number: " + std::string(v));
        }
        c.port = port;
    }
    if (const char* env = std::getenv("SUMMREC_STORE"); env && *env) c.store = env;
    if (const char* env = std::getenv("SUMMREC_EMBED_URL"); env && *env) c.embed_url = env;
    return c;
}

}  // namespace summrec::service
