#include <png.h>

#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>

#include "texbench/error.hpp"
#include "texbench/image.hpp"

namespace texbench {

void ImagePatch::validate() const {
    if (width < 1 || height < 1)
        throw Error("patch '" + id + "' has non-positive size " + std::to_string(width) + "x" +
                    std::to_string(height));
    if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
        throw Error("patch '" + id + "' pixel buffer does not match its dimensions");
}

ImagePatch make_patch(int width, int height, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    ImagePatch p;
    p.width = width;
    p.height = height;
    p.pixels.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < p.pixels.size(); i += 3) {
        p.pixels[i] = r;
        p.pixels[i + 1] = g;
        p.pixels[i + 2] = b;
    }
    return p;
}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open image file " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImagePatch decode_png(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw Error("cannot decode PNG " + path.string() + ": " + image.message);

    image.format = PNG_FORMAT_RGBA;
    std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, rgba.data(), 0, nullptr)) {
        std::string msg = image.message;
        png_image_free(&image);
        throw Error("cannot decode PNG " + path.string() + ": " + msg);
    }

    ImagePatch patch;
    patch.width = static_cast<int>(image.width);
    patch.height = static_cast<int>(image.height);
    patch.pixels.resize(static_cast<std::size_t>(patch.width) * patch.height * 3);
    for (std::size_t i = 0, n = patch.pixels.size() / 3; i < n; ++i)
        std::memcpy(&patch.pixels[i * 3], &rgba[i * 4], 3);
    return patch;
}

ImagePatch decode_ppm(const std::vector<std::uint8_t>& bytes, const std::filesystem::path& path) {
    std::size_t pos = 2;
    auto fail = [&](const std::string& why) -> ImagePatch {
        throw Error("cannot decode PPM " + path.string() + ": " + why);
    };
    auto next_int = [&]() -> long {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) return -1;
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > 1'000'000) return -1;
        }
        return v;
    };
    const long w = next_int();
    const long h = next_int();
    const long maxval = next_int();
    if (w < 1 || h < 1) return fail("bad dimensions");
    if (maxval != 255) return fail("only maxval 255 is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) return fail("malformed header");
    ++pos;
    const std::size_t need = static_cast<std::size_t>(w) * h * 3;
    if (bytes.size() - pos < need) return fail("truncated pixel data");

    ImagePatch patch;
    patch.width = static_cast<int>(w);
    patch.height = static_cast<int>(h);
    patch.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                        bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
    return patch;
}

} // namespace

ImagePatch read_image(const std::filesystem::path& path) {
    const auto bytes = read_bytes(path);
    static constexpr std::array<std::uint8_t, 8> kPngSig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::equal(kPngSig.begin(), kPngSig.end(), bytes.begin()))
        return decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return decode_ppm(bytes, path);
    throw Error("unrecognised image format: " + path.string());
}

void write_png(const ImagePatch& patch, const std::filesystem::path& path) {
    patch.validate();
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(patch.width);
    image.height = static_cast<png_uint_32>(patch.height);
    image.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, patch.pixels.data(), 0, nullptr))
        throw Error("cannot write PNG " + path.string() + ": " + image.message);
}

void write_ppm(const ImagePatch& patch, const std::filesystem::path& path) {
    patch.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "P6\n" << patch.width << ' ' << patch.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(patch.pixels.data()),
              static_cast<std::streamsize>(patch.pixels.size()));
    if (!out) throw Error("cannot write " + path.string());
}

} // namespace texbench
