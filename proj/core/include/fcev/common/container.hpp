#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fcev {

/// On-disk layout shared by tables and trained models:
///   8-byte magic | u64 little-endian header length | JSON header | payload
/// Every header carries "version" and "endianness" ("little").
struct Container {
    nlohmann::json header;
    std::vector<std::uint8_t> payload;
};

void write_container(const std::filesystem::path& path, std::string_view magic, nlohmann::json header,
                     std::span<const std::uint8_t> payload);
Container read_container(const std::filesystem::path& path, std::string_view magic);

/// Little-endian payload encoder.
class ByteWriter {
public:
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v);
    void f64s(std::span<const double> v);
    std::vector<std::uint8_t>& bytes() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Little-endian payload decoder; throws ParseError on truncation.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}
    std::uint32_t u32();
    std::uint64_t u64();
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64();
    std::vector<double> f64s(std::size_t count);
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const;
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

/// FNV-1a 64-bit digest rendered as 16 hex digits.
std::string fnv1a_hex(std::span<const std::uint8_t> data);
std::string digest_doubles(std::span<const double> values);

}  // namespace fcev
