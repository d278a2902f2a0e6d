#include "summrec/common/binary.hpp"

#include "summrec/common/hash.hpp"

namespace summrec {

std::string seal_with_checksum(BinaryWriter& writer) {
    const Sha256Digest digest = sha256(writer.buffer());
    writer.bytes(digest);
    return writer.take();
}

std::string_view verify_checksum(std::string_view sealed, const std::string& context) {
    constexpr std::size_t kDigest = 32;
    if (sealed.size() < kDigest) throw IntegrityError(context + ": truncated (no checksum)");
    const std::string_view body = sealed.substr(0, sealed.size() - kDigest);
    const Sha256Digest digest = sha256(body);
    if (std::string_view(reinterpret_cast<const char*>(digest.data()), kDigest) != sealed.substr(body.size())) {
        throw IntegrityError(context + ": checksum mismatch");
    }
    return body;
}

}  // namespace summrec
