/*
 * morphtrack - 3D morphable model video tracking and reenactment conditioning.
 *
 * File: include/morphtrack/core/binary_io.hpp
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

#ifndef MORPHTRACK_CORE_BINARY_IO_HPP
#define MORPHTRACK_CORE_BINARY_IO_HPP

#include "morphtrack/core/errors.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

namespace morphtrack {
namespace detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
T from_little_endian(const unsigned char* bytes)
{
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, bytes, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
    {
        std::reverse(std::begin(buf), std::end(buf));
    }
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

/// Sequential little-endian decoder over an in-memory buffer. Every failure
/// reports the byte offset where it happened.
class ByteReader
{
public:
    explicit ByteReader(std::vector<unsigned char> bytes) : bytes_(std::move(bytes)) {}

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

    void expect_magic(std::string_view magic)
    {
        require(magic.size(), "magic");
        if (std::memcmp(bytes_.data() + pos_, magic.data(), magic.size()) != 0)
        {
            throw ParseError("bad magic, expected \"" + std::string(magic) + "\"", pos_);
        }
        pos_ += magic.size();
    }

    std::uint32_t u32(const char* what)
    {
        require(4, what);
        const auto v = from_little_endian<std::uint32_t>(bytes_.data() + pos_);
        pos_ += 4;
        return v;
    }

    double f64(const char* what)
    {
        require(8, what);
        const auto v = from_little_endian<double>(bytes_.data() + pos_);
        pos_ += 8;
        return v;
    }

    void f64_array(double* out, std::size_t count, const char* what)
    {
        require_elements(count, 8, what);
        for (std::size_t i = 0; i < count; ++i)
        {
            out[i] = from_little_endian<double>(bytes_.data() + pos_);
            pos_ += 8;
        }
    }

    std::vector<std::uint32_t> u32_array(std::size_t count, const char* what)
    {
        require_elements(count, 4, what);
        std::vector<std::uint32_t> out(count);
        for (auto& v : out)
        {
            v = from_little_endian<std::uint32_t>(bytes_.data() + pos_);
            pos_ += 4;
        }
        return out;
    }

    void expect_end()
    {
        if (pos_ != bytes_.size())
        {
            throw ParseError("trailing bytes after payload", pos_);
        }
    }

private:
    void require(std::size_t n, const char* what) const
    {
        if (remaining() < n)
        {
            throw ParseError(std::string("unexpected end of file while reading ") + what, pos_);
        }
    }

    void require_elements(std::size_t count, std::size_t width, const char* what) const
    {
        if (count > remaining() / width)
        {
            throw ParseError(std::string("unexpected end of file while reading ") + what, pos_);
        }
    }

    std::vector<unsigned char> bytes_;
    std::size_t pos_ = 0;
};

class ByteWriter
{
public:
    void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

    void u32(std::uint32_t v) { put(v); }
    void f64(double v) { put(v); }

    void f64_array(const double* data, std::size_t count)
    {
        for (std::size_t i = 0; i < count; ++i)
        {
            put(data[i]);
        }
    }

    template <typename Range>
    void u32_range(const Range& values)
    {
        for (auto v : values)
        {
            put(static_cast<std::uint32_t>(v));
        }
    }

    const std::vector<unsigned char>& bytes() const noexcept { return bytes_; }

private:
    template <typename T>
    void put(T value)
    {
        unsigned char buf[sizeof(T)];
        std::memcpy(buf, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big)
        {
            std::reverse(std::begin(buf), std::end(buf));
        }
        bytes_.insert(bytes_.end(), std::begin(buf), std::end(buf));
    }

    std::vector<unsigned char> bytes_;
};

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw IoError("cannot open file for reading: " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
    {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
    {
        throw IoError("write failed: " + path.string());
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
    {
        throw IoError("cannot open file for reading: " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
    {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out << text;
    if (!out)
    {
        throw IoError("write failed: " + path.string());
    }
}

} /* namespace detail */
} /* namespace morphtrack */

#endif /* MORPHTRACK_CORE_BINARY_IO_HPP */
