// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlod {

// Little-endian byte stream helpers. All file formats in this project are
// little-endian with explicit sizes; a CRC32 (zlib polynomial) guards each
// chunk or file.

uint32_t crc32_bytes(const void *data, size_t size, uint32_t seed = 0);

class StreamWriter {
  public:
    void u8(uint8_t v) { push(&v, 1); }
    void u16(uint16_t v) { push(&v, 2); }
    void u32(uint32_t v) { push(&v, 4); }
    void u64(uint64_t v) { push(&v, 8); }
    void f32(float v) { push(&v, 4); }
    void f64(double v) { push(&v, 8); }
    void bytes(const void *p, size_t n) { push(p, n); }
    void str(const std::string &s) {
        u32(uint32_t(s.size()));
        push(s.data(), s.size());
    }
    void f32_array(const float *p, size_t n) { push(p, n * 4); }

    size_t size() const { return buf_.size(); }
    const std::vector<uint8_t> &data() const { return buf_; }
    uint32_t crc() const { return crc32_bytes(buf_.data(), buf_.size()); }

  private:
    void push(const void *p, size_t n) {
        const uint8_t *b = static_cast<const uint8_t *>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    std::vector<uint8_t> buf_;
};

class StreamReader {
  public:
    StreamReader(const uint8_t *data, size_t size) : data_(data), size_(size) {}

    uint8_t u8() { return read<uint8_t>(); }
    uint16_t u16() { return read<uint16_t>(); }
    uint32_t u32() { return read<uint32_t>(); }
    uint64_t u64() { return read<uint64_t>(); }
    float f32() { return read<float>(); }
    double f64() { return read<double>(); }
    std::string str() {
        uint32_t n = u32();
        require(n);
        std::string s(reinterpret_cast<const char *>(data_ + pos_), n);
        pos_ += n;
        return s;
    }
    void bytes(void *p, size_t n) {
        require(n);
        std::memcpy(p, data_ + pos_, n);
        pos_ += n;
    }
    void f32_array(float *p, size_t n) { bytes(p, n * 4); }
    void skip(size_t n) {
        require(n);
        pos_ += n;
    }

    size_t pos() const { return pos_; }
    size_t remaining() const { return size_ - pos_; }
    const uint8_t *cursor() const { return data_ + pos_; }

  private:
    template <typename T>
    T read() {
        require(sizeof(T));
        T v;
        std::memcpy(&v, data_ + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    void require(size_t n) {
        if (pos_ + n > size_) throw std::runtime_error("stream: truncated read");
    }
    const uint8_t *data_;
    size_t size_;
    size_t pos_ = 0;
};

void write_file_bytes(const std::string &path, const std::vector<uint8_t> &data);
std::vector<uint8_t> read_file_bytes(const std::string &path);

}  // namespace vlod
