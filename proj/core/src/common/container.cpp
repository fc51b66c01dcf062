#include "fcev/common/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fcev/common/error.hpp"

namespace fcev {

namespace {

constexpr std::size_t kMagicSize = 8;

std::string padded_magic(std::string_view magic) {
    std::string m(magic.substr(0, kMagicSize));
    m.resize(kMagicSize, ' ');
    return m;
}

}  // namespace

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f64s(std::span<const double> v) {
    buf_.reserve(buf_.size() + 8 * v.size());
    for (double d : v) f64(d);
}

void ByteReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw ParseError("binary payload truncated");
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<double> ByteReader::f64s(std::size_t count) {
    need(8 * count);
    std::vector<double> out(count);
    for (auto& d : out) d = f64();
    return out;
}

void write_container(const std::filesystem::path& path, std::string_view magic, nlohmann::json header,
                     std::span<const std::uint8_t> payload) {
    header["endianness"] = "little";
    if (!header.contains("version")) header["version"] = 1;
    const std::string text = header.dump();
    ByteWriter prefix;
    prefix.u64(text.size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    const std::string m = padded_magic(magic);
    out.write(m.data(), static_cast<std::streamsize>(m.size()));
    out.write(reinterpret_cast<const char*>(prefix.bytes().data()), 8);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::vector<std::uint8_t> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (raw.size() < kMagicSize + 8) throw ParseError(path.string() + ": file too short for container");
    if (std::memcmp(raw.data(), padded_magic(magic).data(), kMagicSize) != 0) {
        throw ParseError(path.string() + ": unexpected file magic");
    }
    ByteReader len(std::span<const std::uint8_t>(raw).subspan(kMagicSize, 8));
    const std::uint64_t header_len = len.u64();
    if (raw.size() - kMagicSize - 8 < header_len) throw ParseError(path.string() + ": header truncated");
    const auto* hbegin = reinterpret_cast<const char*>(raw.data() + kMagicSize + 8);
    Container c;
    try {
        c.header = nlohmann::json::parse(hbegin, hbegin + header_len);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad JSON header: " + e.what());
    }
    if (c.header.value("endianness", "") != "little") throw ParseError(path.string() + ": unsupported endianness");
    c.payload.assign(raw.begin() + static_cast<std::ptrdiff_t>(kMagicSize + 8 + header_len), raw.end());
    return c;
}

std::string fnv1a_hex(std::span<const std::uint8_t> data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : data) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = kHex[h & 0xf];
        h >>= 4;
    }
    return s;
}

std::string digest_doubles(std::span<const double> values) {
    ByteWriter w;
    w.f64s(values);
    return fnv1a_hex(w.bytes());
}

}  // namespace fcev
