#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "summrec/common/error.hpp"

namespace summrec {

static_assert(std::endian::native == std::endian::little, "binary records are written little-endian");

// Appends fixed-width little-endian fields.
class BinaryWriter {
public:
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void bytes(std::span<const std::uint8_t> b) { raw(b.data(), b.size()); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    void f64s(std::span<const double> values) {
        u64(values.size());
        raw(values.data(), values.size() * sizeof(double));
    }
    void magic(std::string_view m) { raw(m.data(), m.size()); }

    const std::string& buffer() const { return buffer_; }
    std::string take() { return std::move(buffer_); }

private:
    void raw(const void* p, std::size_t n) { buffer_.append(static_cast<const char*>(p), n); }

    std::string buffer_;
};

// Bounds-checked reader; any overrun is reported as an IntegrityError naming
// `context`.
class BinaryReader {
public:
    BinaryReader(std::string_view data, std::string context) : data_(data), context_(std::move(context)) {}

    std::uint32_t u32() { return pod<std::uint32_t>(); }
    std::uint64_t u64() { return pod<std::uint64_t>(); }
    double f64() { return pod<double>(); }

    std::string str() {
        const std::uint32_t n = u32();
        need(n);
        std::string s(data_.substr(pos_, n));
        pos_ += n;
        return s;
    }

    std::vector<double> f64s(std::size_t max_count = (1u << 28)) {
        const std::uint64_t n = u64();
        if (n > max_count) fail("implausible array length");
        need(n * sizeof(double));
        std::vector<double> out(n);
        std::memcpy(out.data(), data_.data() + pos_, n * sizeof(double));
        pos_ += n * sizeof(double);
        return out;
    }

    void bytes(std::span<std::uint8_t> out) {
        need(out.size());
        std::memcpy(out.data(), data_.data() + pos_, out.size());
        pos_ += out.size();
    }

    void expect_magic(std::string_view m) {
        need(m.size());
        if (data_.substr(pos_, m.size()) != m) fail("bad magic");
        pos_ += m.size();
    }

    std::size_t position() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

    [[noreturn]] void fail(const std::string& why) const {
        throw IntegrityError(context_ + ": " + why + " at byte " + std::to_string(pos_));
    }

private:
    template <typename T>
    T pod() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void need(std::size_t n) const {
        if (n > data_.size() - pos_) fail("truncated record");
    }

    std::string_view data_;
    std::string context_;
    std::size_t pos_ = 0;
};

// Appends SHA-256 of everything written so far. Returns the finished buffer.
std::string seal_with_checksum(BinaryWriter& writer);

// Verifies and strips the trailing SHA-256. Throws IntegrityError naming
// `context` when the file is too short or the digest does not match.
std::string_view verify_checksum(std::string_view sealed, const std::string& context);

}  // namespace summrec
