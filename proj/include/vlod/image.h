// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vlod/vecmath.h"

namespace vlod {

// Linear RGB float image, row 0 at the top.
struct ImageBuffer {
    int width = 0, height = 0;
    std::vector<Vec3f> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, const Vec3f &fill = Vec3f(0)) : width(w), height(h) {
        pixels.assign(size_t(w) * h, fill);
    }

    Vec3f &at(int x, int y) { return pixels[size_t(y) * width + x]; }
    const Vec3f &at(int x, int y) const { return pixels[size_t(y) * width + x]; }

    // bilinear sample, uv in [0,1]^2 with v = 0 at the top row; clamped
    Vec3f sample_bilinear(float u, float v) const;
};

inline float srgb_encode(float x) {
    x = clamp(x, 0.0f, 1.0f);
    return x <= 0.0031308f ? 12.92f * x : 1.055f * std::pow(x, 1.0f / 2.4f) - 0.055f;
}

inline float srgb_decode(float x) {
    return x <= 0.04045f ? x / 12.92f : std::pow((x + 0.055f) / 1.055f, 2.4f);
}

// PFM, color variant ("PF"), little-endian (negative scale), bit exact
void write_pfm(const std::string &path, const ImageBuffer &img);
ImageBuffer read_pfm(const std::string &path);

// 8-bit RGB PNG preview; pixel = srgb(linear * exposure)
void write_png(const std::string &path, const ImageBuffer &img, float exposure = 1.0f);
// decodes to linear floats; srgb=false keeps raw values / 255
ImageBuffer read_png(const std::string &path, bool srgb = true);

// picks the loader by extension (.pfm / .png)
ImageBuffer read_image(const std::string &path, bool srgb = true);
void write_image(const std::string &path, const ImageBuffer &img, float exposure = 1.0f);

// root-mean-square error over all linear RGB channels; images must match in size
double image_rmse(const ImageBuffer &a, const ImageBuffer &b);
// PSNR against peak 1.0: 20*log10(1/rmse); +inf for identical images
double psnr_from_rmse(double rmse);

}  // namespace vlod
