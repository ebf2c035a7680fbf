#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptloop/error.hpp"
#include "promptloop/image/image_buffer.hpp"

namespace promptloop {

enum class image_format { png, ppm };

using byte_buffer = std::vector<std::uint8_t>;

namespace detail {

inline std::uint8_t quantize8(double s) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(s, 0.0, 1.0) * 255.0));
}

struct png_io_state {
    std::span<const std::uint8_t> input;
    std::size_t offset = 0;
    byte_buffer* output = nullptr;
    char message[256] = {};
};

extern "C" inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto* state = static_cast<png_io_state*>(png_get_error_ptr(png));
    std::snprintf(state->message, sizeof(state->message), "%s", msg ? msg : "libpng error");
    png_longjmp(png, 1);
}

extern "C" inline void png_warning_handler(png_structp, png_const_charp) {}

extern "C" inline void png_read_callback(png_structp png, png_bytep out, png_size_t length) {
    auto* state = static_cast<png_io_state*>(png_get_io_ptr(png));
    if (state->offset + length > state->input.size()) {
        std::snprintf(state->message, sizeof(state->message), "unexpected end of PNG stream");
        png_longjmp(png, 1);
    }
    std::memcpy(out, state->input.data() + state->offset, length);
    state->offset += length;
}

extern "C" inline void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
    auto* state = static_cast<png_io_state*>(png_get_io_ptr(png));
    state->output->insert(state->output->end(), data, data + length);
}

extern "C" inline void png_flush_callback(png_structp) {}

inline image_buffer decode_png(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw decode_error("missing PNG signature", 0);

    png_io_state state;
    state.input = bytes;

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler, png_warning_handler);
    if (!png)
        throw decode_error("cannot allocate PNG reader", 0);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw decode_error("cannot allocate PNG info", 0);
    }

    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 width = 0;
    png_uint_32 height = 0;
    int bit_depth = 0;
    int channels = 0;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw decode_error(std::string("malformed PNG: ") + state.message, state.offset);
    }

    png_set_read_fn(png, &state, png_read_callback);
    png_read_info(png, info);

    width = png_get_image_width(png, info);
    height = png_get_image_height(png, info);
    bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    // also drops the alpha channel that expansion synthesizes from a tRNS chunk
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    bit_depth = png_get_bit_depth(png, info);
    channels = png_get_channels(png, info);
    const std::size_t row_bytes = png_get_rowbytes(png, info);

    pixels.resize(row_bytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y)
        rows[y] = pixels.data() + y * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (channels != 1 && channels != 3)
        throw decode_error("unsupported PNG channel layout (" + std::to_string(channels) + " channels)", 0);

    std::vector<double> samples(static_cast<std::size_t>(width) * height * channels);
    if (bit_depth == 16) {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const unsigned v = (unsigned(pixels[2 * i]) << 8) | pixels[2 * i + 1];
            samples[i] = v / 65535.0;
        }
    } else {
        for (std::size_t i = 0; i < samples.size(); ++i)
            samples[i] = pixels[i] / 255.0;
    }
    return image_buffer(width, height, static_cast<std::size_t>(channels), std::move(samples));
}

inline byte_buffer encode_png(const image_buffer& img) {
    byte_buffer out;
    png_io_state state;
    state.output = &out;

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &state, png_error_handler, png_warning_handler);
    if (!png)
        throw error("cannot allocate PNG writer");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw error("cannot allocate PNG info");
    }

    const std::size_t row_len = img.width() * img.channels();
    std::vector<std::uint8_t> pixels(row_len * img.height());
    std::transform(img.samples().begin(), img.samples().end(), pixels.begin(), quantize8);
    std::vector<png_bytep> rows(img.height());
    for (std::size_t y = 0; y < img.height(); ++y)
        rows[y] = pixels.data() + y * row_len;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw error(std::string("PNG encoding failed: ") + state.message);
    }

    png_set_write_fn(png, &state, png_write_callback, png_flush_callback);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
                 img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

// ASCII netpbm tokenizer; '#' starts a comment running to end of line.
class pnm_tokens {
public:
    explicit pnm_tokens(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const noexcept { return pos_; }

    std::string_view next(const char* what) {
        skip_space();
        if (pos_ >= bytes_.size())
            throw decode_error(std::string("unexpected end of PPM stream while reading ") + what, pos_);
        const std::size_t start = pos_;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
            ++pos_;
        return {reinterpret_cast<const char*>(bytes_.data()) + start, pos_ - start};
    }

    unsigned long next_uint(const char* what, unsigned long max_value) {
        skip_space();
        const std::size_t start = pos_;
        const auto token = next(what);
        unsigned long value = 0;
        for (char c : token) {
            if (c < '0' || c > '9')
                throw decode_error(std::string("invalid ") + what + " token '" + std::string(token) + "'", start);
            value = value * 10 + static_cast<unsigned long>(c - '0');
            if (value > max_value)
                throw decode_error(std::string(what) + " exceeds " + std::to_string(max_value), start);
        }
        return value;
    }

private:
    void skip_space() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n')
                    ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

// Reads ASCII P3 (RGB) and P2 (gray) netpbm files.
inline image_buffer decode_ppm(std::span<const std::uint8_t> bytes) {
    pnm_tokens tokens(bytes);
    const auto magic = tokens.next("magic number");
    std::size_t channels = 0;
    if (magic == "P3")
        channels = 3;
    else if (magic == "P2")
        channels = 1;
    else
        throw decode_error("unsupported netpbm magic '" + std::string(magic) + "' (expected P3 or P2)", 0);

    const auto width = tokens.next_uint("width", 1u << 24);
    const auto height = tokens.next_uint("height", 1u << 24);
    if (width == 0 || height == 0)
        throw decode_error("zero image dimension", tokens.offset());
    const auto max_value = tokens.next_uint("maxval", 65535);
    if (max_value == 0)
        throw decode_error("maxval must be positive", tokens.offset());

    std::vector<double> samples(width * height * channels);
    for (auto& s : samples)
        s = static_cast<double>(tokens.next_uint("sample", max_value)) / static_cast<double>(max_value);
    return image_buffer(width, height, channels, std::move(samples));
}

inline byte_buffer encode_ppm(const image_buffer& img) {
    std::string text = img.channels() == 3 ? "P3\n" : "P2\n";
    text += std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    const auto samples = img.samples();
    const std::size_t row_len = img.width() * img.channels();
    for (std::size_t y = 0; y < img.height(); ++y) {
        for (std::size_t i = 0; i < row_len; ++i) {
            if (i)
                text += ' ';
            text += std::to_string(quantize8(samples[y * row_len + i]));
        }
        text += '\n';
    }
    return byte_buffer(text.begin(), text.end());
}

} // namespace detail

inline image_buffer decode(std::span<const std::uint8_t> bytes, image_format format) {
    return format == image_format::png ? detail::decode_png(bytes) : detail::decode_ppm(bytes);
}

/// Writes 8-bit samples; 3-channel PPM becomes P3, 1-channel becomes P2.
inline byte_buffer encode(const image_buffer& img, image_format format) {
    if (img.empty())
        throw precondition_error("cannot encode an empty image");
    return format == image_format::png ? detail::encode_png(img) : detail::encode_ppm(img);
}

inline image_format detect_format(std::span<const std::uint8_t> bytes) {
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0)
        return image_format::png;
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '3' || bytes[1] == '2'))
        return image_format::ppm;
    throw decode_error("unrecognized image format", 0);
}

inline image_format format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm")
        return image_format::ppm;
    return image_format::png;
}

inline byte_buffer read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw error("cannot open file " + path.string());
    return byte_buffer(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw error("cannot write file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

/// Decodes a file, sniffing the format from its leading bytes.
inline image_buffer load_image(const std::filesystem::path& path) {
    const auto bytes = read_file_bytes(path);
    try {
        return decode(bytes, detect_format(bytes));
    } catch (const decode_error& e) {
        throw decode_error(path.string() + ": " + e.message(), e.offset());
    }
}

inline void save_image(const std::filesystem::path& path, const image_buffer& img) {
    write_file_bytes(path, encode(img, format_from_path(path)));
}

} // namespace promptloop
