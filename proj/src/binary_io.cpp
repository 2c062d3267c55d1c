#include "texbench/binary_io.hpp"

#include <iterator>

namespace texbench {

BinaryWriter::BinaryWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
}

void BinaryWriter::bytes(const void* p, std::size_t n) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    if (!out_) throw Error("write failed: " + path_.string());
}

void BinaryWriter::f32s(const float* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        bytes(v, n * sizeof(float));
    } else {
        for (std::size_t i = 0; i < n; ++i) f32(v[i]);
    }
}

void BinaryWriter::close() {
    out_.close();
    if (!out_) throw Error("write failed: " + path_.string());
}

BinaryReader::BinaryReader(const std::filesystem::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void BinaryReader::fail(const std::string& what) const {
    throw ParseError(path_.string(), 0, what + " at byte offset " + std::to_string(pos_));
}

void BinaryReader::need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("unexpected end of file");
}

void BinaryReader::expect_magic(const char (&tag)[5]) {
    need(4);
    if (std::memcmp(&data_[pos_], tag, 4) != 0) fail(std::string("bad magic, expected '") + tag + "'");
    pos_ += 4;
}

std::uint8_t BinaryReader::u8() {
    need(1);
    return data_[pos_++];
}

void BinaryReader::f32s(float* v, std::size_t n) {
    need(n * sizeof(float));
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(v, &data_[pos_], n * sizeof(float));
        pos_ += n * sizeof(float);
    } else {
        for (std::size_t i = 0; i < n; ++i) v[i] = f32();
    }
}

std::string BinaryReader::str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(&data_[pos_]), n);
    pos_ += n;
    return s;
}

void BinaryReader::expect_end() {
    if (!at_end()) fail("trailing bytes");
}

} // namespace texbench
