// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vlod/rng.h"
#include "vlod/scene.h"

namespace vlod {

// Principled BRDF, reduced: Lambertian diffuse, one GGX specular lobe with
// metallic and dielectric Schlick Fresnel, no sheen or clearcoat, and
// double-sided. Directions are unit vectors in the local shading frame
// (+z is the surface normal); reflection happens on the side of wo.
//
//   f = (1 - metallic) * basecolor / pi
//     + D * G / (4 |n.wi| |n.wo|) * (metallic * F(basecolor)
//                                    + (1 - metallic) * F(specular))
Vec3f disney_eval(const MaterialSample &m, const Vec3f &wi, const Vec3f &wo);

// Mixture of cosine-hemisphere (diffuse) and GGX visible-normal (specular)
// strategies. Returns the BRDF value and fills wi and the solid-angle pdf;
// zero value means an invalid sample.
Vec3f disney_sample(const MaterialSample &m, const Vec3f &wo, Pcg32 &rng, Vec3f *wi, float *pdf);

float disney_pdf(const MaterialSample &m, const Vec3f &wi, const Vec3f &wo);

// Schlick reflectance with normal-incidence value r0
inline Vec3f schlick(const Vec3f &r0, float cos_ho) {
    float fc = 1.0f - std::fabs(cos_ho);
    float f5 = sqr(sqr(fc)) * fc;
    return r0 * (1.0f - f5) + Vec3f(f5);
}

}  // namespace vlod
