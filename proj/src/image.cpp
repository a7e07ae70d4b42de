// SPDX-License-Identifier: Apache-2.0
#include "vlod/image.h"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace vlod {

Vec3f ImageBuffer::sample_bilinear(float u, float v) const {
    if (width <= 0 || height <= 0) return Vec3f(0);
    float x = clamp(u, 0.0f, 1.0f) * width - 0.5f;
    float y = clamp(v, 0.0f, 1.0f) * height - 0.5f;
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    float tx = x - x0, ty = y - y0;
    auto fetch = [&](int xi, int yi) {
        xi = clamp(xi, 0, width - 1);
        yi = clamp(yi, 0, height - 1);
        return at(xi, yi);
    };
    Vec3f a = fetch(x0, y0), b = fetch(x0 + 1, y0);
    Vec3f c = fetch(x0, y0 + 1), d = fetch(x0 + 1, y0 + 1);
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

void write_pfm(const std::string &path, const ImageBuffer &img) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    std::fprintf(f, "PF\n%d %d\n-1.0\n", img.width, img.height);
    // PFM stores rows bottom to top
    for (int y = img.height - 1; y >= 0; --y) {
        size_t n = std::fwrite(&img.at(0, y), sizeof(Vec3f), size_t(img.width), f);
        if (n != size_t(img.width)) {
            std::fclose(f);
            throw std::runtime_error("short write: " + path);
        }
    }
    std::fclose(f);
}

ImageBuffer read_pfm(const std::string &path) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open: " + path);
    char tag[3] = {};
    int w = 0, h = 0;
    float scale = 0;
    if (std::fscanf(f, "%2s %d %d %f", tag, &w, &h, &scale) != 4 || std::strcmp(tag, "PF") != 0 ||
        w <= 0 || h <= 0) {
        std::fclose(f);
        throw std::runtime_error("not a color PFM: " + path);
    }
    std::fgetc(f);  // single whitespace after the scale
    ImageBuffer img(w, h);
    bool little_endian = scale < 0.0f;
    for (int y = h - 1; y >= 0; --y) {
        size_t n = std::fread(&img.at(0, y), sizeof(Vec3f), size_t(w), f);
        if (n != size_t(w)) {
            std::fclose(f);
            throw std::runtime_error("truncated PFM: " + path);
        }
    }
    std::fclose(f);
    if (!little_endian) {
        for (Vec3f &p : img.pixels)
            for (int c = 0; c < 3; ++c) {
                uint32_t v;
                std::memcpy(&v, &p[c], 4);
                v = __builtin_bswap32(v);
                std::memcpy(&p[c], &v, 4);
            }
    }
    return img;
}

void write_png(const std::string &path, const ImageBuffer &img, float exposure) {
    FILE *f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for write: " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        std::fclose(f);
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write failed: " + path);
    }
    png_init_io(png, f);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<uint8_t> row(size_t(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            Vec3f p = img.at(x, y) * exposure;
            row[3 * x + 0] = uint8_t(srgb_encode(p.x) * 255.0f + 0.5f);
            row[3 * x + 1] = uint8_t(srgb_encode(p.y) * 255.0f + 0.5f);
            row[3 * x + 2] = uint8_t(srgb_encode(p.z) * 255.0f + 0.5f);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(f);
}

ImageBuffer read_png(const std::string &path, bool srgb) {
    FILE *f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("cannot open: " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        std::fclose(f);
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png read failed: " + path);
    }
    png_init_io(png, f);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    int w = int(png_get_image_width(png, info));
    int h = int(png_get_image_height(png, info));
    ImageBuffer img(w, h);
    std::vector<uint8_t> row(size_t(w) * 3);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x) {
            Vec3f p(row[3 * x] / 255.0f, row[3 * x + 1] / 255.0f, row[3 * x + 2] / 255.0f);
            if (srgb) p = {srgb_decode(p.x), srgb_decode(p.y), srgb_decode(p.z)};
            img.at(x, y) = p;
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(f);
    return img;
}

static bool has_suffix(const std::string &s, const char *suffix) {
    size_t n = std::strlen(suffix);
    return s.size() >= n && s.compare(s.size() - n, n, suffix) == 0;
}

ImageBuffer read_image(const std::string &path, bool srgb) {
    if (has_suffix(path, ".pfm")) return read_pfm(path);
    if (has_suffix(path, ".png")) return read_png(path, srgb);
    throw std::runtime_error("unsupported image extension: " + path);
}

void write_image(const std::string &path, const ImageBuffer &img, float exposure) {
    if (has_suffix(path, ".pfm")) return write_pfm(path, img);
    if (has_suffix(path, ".png")) return write_png(path, img, exposure);
    throw std::runtime_error("unsupported image extension: " + path);
}

double image_rmse(const ImageBuffer &a, const ImageBuffer &b) {
    if (a.width != b.width || a.height != b.height)
        throw std::runtime_error("image size mismatch");
    double sum = 0;
    for (size_t i = 0; i < a.pixels.size(); ++i) {
        Vec3f d = a.pixels[i] - b.pixels[i];
        sum += double(d.x) * d.x + double(d.y) * d.y + double(d.z) * d.z;
    }
    return std::sqrt(sum / (double(a.pixels.size()) * 3.0));
}

double psnr_from_rmse(double rmse) {
    if (rmse <= 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(1.0 / rmse);
}

}  // namespace vlod
