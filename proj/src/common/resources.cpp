#include "summrec/common/resources.hpp"

#include <cstdlib>
#include <filesystem>

#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/common/text.hpp"

namespace summrec {

std::string load_resource(std::string_view name) {
    if (const char* dir = std::getenv("SUMMREC_DATA_DIR"); dir != nullptr && *dir != '\0') {
        const std::filesystem::path path = std::filesystem::path(dir) / std::string(name);
        if (std::filesystem::exists(path)) return read_file(path);
    }
    if (auto embedded = embedded_resource(name)) return std::string(*embedded);
    throw NotFoundError("unknown resource: " + std::string(name));
}

std::vector<std::string> resource_lines(std::string_view content) {
    std::vector<std::string> out;
    for (std::string_view line : split_lines(content)) {
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) out.emplace_back(line);
    }
    return out;
}

}  // namespace summrec
