// SPDX-License-Identifier: Apache-2.0
#include "vlod/serialization.h"

#include <zlib.h>

#include <cstdio>

namespace vlod {

uint32_t crc32_bytes(const void *data, size_t size, uint32_t seed) {
    return uint32_t(::crc32(seed, static_cast<const Bytef *>(data), uInt(size)));
}

void write_file_bytes(const std::string &path, const std::vector<uint8_t> &data) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    size_t n = data.empty() ? 0 : std::fwrite(data.data(), 1, data.size(), f);
    std::fclose(f);
    if (n != data.size()) throw std::runtime_error("short write: " + path);
}

std::vector<uint8_t> read_file_bytes(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::fseek(f, 0, SEEK_END);
    long size = std::ftell(f);
    std::fseek(f, 0, SEEK_SET);
    std::vector<uint8_t> data(size_t(std::max(0L, size)));
    size_t n = data.empty() ? 0 : std::fread(data.data(), 1, data.size(), f);
    std::fclose(f);
    if (n != data.size()) throw std::runtime_error("short read: " + path);
    return data;
}

}  // namespace vlod
