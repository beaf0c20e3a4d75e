/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/conditioning/image.hpp
 *
 * Copyright 2026 The morphtrack Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#ifndef MORPHTRACK_CONDITIONING_IMAGE_HPP
#define MORPHTRACK_CONDITIONING_IMAGE_HPP

#include "morphtrack/core/errors.hpp"

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace morphtrack {
namespace conditioning {

/// 8-bit image with interleaved channels, row-major, origin top-left.
template <int Channels>
struct Image
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * Channels, 0) {}

    static constexpr int channels = Channels;

    std::uint8_t* pixel(int x, int y) { return data.data() + (static_cast<std::size_t>(y) * width + x) * Channels; }
    const std::uint8_t* pixel(int x, int y) const
    {
        return data.data() + (static_cast<std::size_t>(y) * width + x) * Channels;
    }

    bool operator==(const Image&) const = default;
};

using RgbImage = Image<3>;
using GrayImage = Image<1>;
using Rgb = std::array<std::uint8_t, 3>;

namespace detail {

struct FileCloser
{
    void operator()(std::FILE* f) const { std::fclose(f); }
};

template <int Channels>
constexpr int png_color_type()
{
    static_assert(Channels == 1 || Channels == 3);
    return Channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
}

// Errors surface as exceptions; libpng's default handlers would also print.
inline void png_error_quiet(png_structp png, png_const_charp)
{
    png_longjmp(png, 1);
}

inline void png_warning_quiet(png_structp, png_const_charp) {}

} /* namespace detail */

/// Writes an 8-bit PNG. Output bytes depend only on the pixel data.
template <int Channels>
void write_png(const Image<Channels>& image, const std::filesystem::path& path)
{
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.c_str(), "wb"));
    if (!file)
    {
        throw IoError("cannot open file for writing: " + path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_quiet,
                                              detail::png_warning_quiet);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info)
    {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed: " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
                 detail::png_color_type<Channels>(), PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y)
    {
        png_write_row(png, const_cast<png_bytep>(image.pixel(0, y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0)
    {
        throw IoError("write failed: " + path.string());
    }
}

/// Reads a PNG and converts it to 8-bit RGB.
inline RgbImage read_png_rgb(const std::filesystem::path& path)
{
    std::unique_ptr<std::FILE, detail::FileCloser> file(std::fopen(path.c_str(), "rb"));
    if (!file)
    {
        throw IoError("cannot open image: " + path.string());
    }
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_error_quiet,
                                             detail::png_warning_quiet);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info)
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }
    RgbImage image;
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("invalid PNG file " + path.string(), 0);
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    png_set_palette_to_rgb(png);
    png_set_expand_gray_1_2_4_to_8(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    image = RgbImage(static_cast<int>(png_get_image_width(png, info)), static_cast<int>(png_get_image_height(png, info)));
    if (png_get_rowbytes(png, info) != static_cast<std::size_t>(image.width) * 3)
    {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError("unsupported PNG layout " + path.string(), 0);
    }
    for (int y = 0; y < image.height; ++y)
    {
        png_read_row(png, image.pixel(0, y), nullptr);
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return image;
}

} /* namespace conditioning */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CONDITIONING_IMAGE_HPP */
