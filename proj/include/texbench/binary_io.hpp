#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "texbench/error.hpp"

namespace texbench {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

/// Little-endian binary writer over a file.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::filesystem::path& path);

    void magic(const char (&tag)[5]) { bytes(tag, 4); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u16(std::uint16_t v) { le(v); }
    void u32(std::uint32_t v) { le(v); }
    void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
    void f32s(const float* v, std::size_t n);
    void close();

private:
    template <typename T>
    void le(T v) {
        unsigned char b[sizeof(T)];
        for (std::size_t i = 0; i < sizeof(T); ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, sizeof(T));
    }
    void bytes(const void* p, std::size_t n);

    std::filesystem::path path_;
    std::ofstream out_;
};

/// Little-endian binary reader over a whole file; errors name the file.
class BinaryReader {
public:
    explicit BinaryReader(const std::filesystem::path& path);

    void expect_magic(const char (&tag)[5]);
    std::uint8_t u8();
    std::uint16_t u16() { return le<std::uint16_t>(); }
    std::uint32_t u32() { return le<std::uint32_t>(); }
    float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
    void f32s(float* v, std::size_t n);
    std::string str(std::size_t n);
    bool at_end() const noexcept { return pos_ == data_.size(); }
    void expect_end();
    [[noreturn]] void fail(const std::string& what) const;

private:
    template <typename T>
    T le() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(data_[pos_ + i]) << (8 * i));
        pos_ += sizeof(T);
        return v;
    }
    void need(std::size_t n) const;

    std::filesystem::path path_;
    std::vector<unsigned char> data_;
    std::size_t pos_ = 0;
};

} // namespace texbench
