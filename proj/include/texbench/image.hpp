#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace texbench {

/// Labeled RGB patch, 8 bits per channel, row-major interleaved RGB.
struct ImagePatch {
    std::vector<std::uint8_t> pixels;
    int width = 0;
    int height = 0;
    int label = 0;
    std::string id;

    std::uint8_t at(int x, int y, int c) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    std::uint8_t& at(int x, int y, int c) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }

    /// Throws texbench::Error when the buffer does not match the dimensions.
    void validate() const;
};

/// Blank patch filled with one colour.
ImagePatch make_patch(int width, int height, std::uint8_t r = 0, std::uint8_t g = 0,
                      std::uint8_t b = 0);

/// Decodes an 8-bit RGB/RGBA PNG (alpha dropped) or a binary P6 PPM with maxval 255.
/// The format is chosen by file signature, not extension. Errors name the file.
ImagePatch read_image(const std::filesystem::path& path);

void write_png(const ImagePatch& patch, const std::filesystem::path& path);
void write_ppm(const ImagePatch& patch, const std::filesystem::path& path);

} // namespace texbench
