#pragma once

#include <stdexcept>
#include <string>

namespace summrec {

// Every failure raised by the library derives from Error. The code() string is
// stable and is what the HTTP layer reports to clients.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

#define SUMMREC_DEFINE_ERROR(Name, Code)                                    \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& what) : Error(Code, what) {}        \
    };

SUMMREC_DEFINE_ERROR(PreconditionError, "precondition_failed")
SUMMREC_DEFINE_ERROR(DecodingError, "decoding_error")
SUMMREC_DEFINE_ERROR(IoError, "io_error")
SUMMREC_DEFINE_ERROR(IntegrityError, "integrity_error")
SUMMREC_DEFINE_ERROR(VersionError, "unsupported_version")
SUMMREC_DEFINE_ERROR(NotFoundError, "not_found")
SUMMREC_DEFINE_ERROR(ConflictError, "conflict")
SUMMREC_DEFINE_ERROR(TransportError, "transport_error")
SUMMREC_DEFINE_ERROR(ProtocolError, "protocol_error")
SUMMREC_DEFINE_ERROR(TrainingError, "training_aborted")
SUMMREC_DEFINE_ERROR(ParseError, "parse_error")

#undef SUMMREC_DEFINE_ERROR

inline void require(bool condition, const std::string& what) {
    if (!condition) throw PreconditionError(what);
}

}  // namespace summrec
