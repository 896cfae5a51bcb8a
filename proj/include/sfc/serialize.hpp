#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sfc/errors.hpp"

namespace sfc {

// Little-endian primitive readers/writers shared by all file formats.
// Serialization goes through byte buffers so outputs can be written
// atomically (temp file + rename) by the callers.

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte-swapping is not implemented");

class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }
    void u16(uint16_t v) { append(&v, 2); }
    void u32(uint32_t v) { append(&v, 4); }
    void u64(uint64_t v) { append(&v, 8); }
    void f32(float v) { append(&v, 4); }
    void f64(double v) { append(&v, 8); }
    void bytes(const uint8_t* p, size_t n) { buf_.insert(buf_.end(), p, p + n); }
    void magic(const char tag[4]) { bytes(reinterpret_cast<const uint8_t*>(tag), 4); }

    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

private:
    void append(const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<uint8_t> buf_;
};

class ByteReader {
public:
    ByteReader(const uint8_t* data, size_t size, std::string what)
        : data_(data), size_(size), what_(std::move(what)) {}
    explicit ByteReader(const std::vector<uint8_t>& data, std::string what = "buffer")
        : ByteReader(data.data(), data.size(), std::move(what)) {}

    uint8_t u8() { return read<uint8_t>(); }
    uint16_t u16() { return read<uint16_t>(); }
    uint32_t u32() { return read<uint32_t>(); }
    uint64_t u64() { return read<uint64_t>(); }
    float f32() { return read<float>(); }
    double f64() { return read<double>(); }

    std::string tag4(const std::string& field) {
        if (size_ - pos_ < 4)
            throw DataError(what_ + ": truncated before " + field);
        std::string s(reinterpret_cast<const char*>(data_ + pos_), 4);
        pos_ += 4;
        return s;
    }

    void expect_magic(const char tag[4], const std::string& format_name) {
        if (size_ - pos_ < 4)
            throw DataError(what_ + ": truncated before " + format_name + " magic");
        if (std::memcmp(data_ + pos_, tag, 4) != 0)
            throw DataError(what_ + ": bad magic, not a " + format_name + " file");
        pos_ += 4;
    }

    const uint8_t* raw(size_t n) {
        need(n);
        const uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }

    size_t remaining() const { return size_ - pos_; }
    size_t pos() const { return pos_; }
    const std::string& what() const { return what_; }

private:
    template <typename T>
    T read() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void need(size_t n) {
        if (size_ - pos_ < n)
            throw DataError(what_ + ": truncated at byte " + std::to_string(pos_));
    }

    const uint8_t* data_;
    size_t size_;
    size_t pos_ = 0;
    std::string what_;
};

inline std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open file: " + path);
    f.seekg(0, std::ios::end);
    const std::streamoff n = f.tellg();
    f.seekg(0, std::ios::beg);
    std::vector<uint8_t> buf(static_cast<size_t>(n));
    if (n > 0) f.read(reinterpret_cast<char*>(buf.data()), n);
    if (!f) throw DataError("read failed: " + path);
    return buf;
}

// Writes via a temp file in the same directory, then renames, so an
// interrupted run never leaves a partial artifact at `path`.
inline void write_file_atomic(const std::string& path, const std::vector<uint8_t>& data) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw DataError("cannot open for writing: " + tmp);
        if (!data.empty())
            f.write(reinterpret_cast<const char*>(data.data()),
                    static_cast<std::streamsize>(data.size()));
        if (!f) throw DataError("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw DataError("rename failed: " + tmp + " -> " + path);
}

}  // namespace sfc
