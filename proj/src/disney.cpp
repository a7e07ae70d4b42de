// SPDX-License-Identifier: Apache-2.0
#include "vlod/disney.h"

#include "vlod/mappings.h"
#include "vlod/sggx.h"

namespace vlod {

namespace {

constexpr float kGrazeEps = 1e-7f;

inline float luminance(const Vec3f &c) { return 0.2126f * c.x + 0.7152f * c.y + 0.0722f * c.z; }

// probability of picking the diffuse strategy, from approximate albedos
float diffuse_select_prob(const MaterialSample &m) {
    float kd = (1.0f - m.metallic) * luminance(m.basecolor);
    float ks = m.metallic * luminance(m.basecolor) + (1.0f - m.metallic) * m.specular;
    if (kd + ks <= 0.0f) return 1.0f;
    return clamp(kd / (kd + ks), 0.05f, 0.95f);
}

// GGX visible-normal sampling (Heitz 2018); wo.z > 0
Vec3f sample_ggx_vndf(const Vec3f &wo, float alpha, const Vec2f &u) {
    Vec3f vh = normalize(Vec3f(alpha * wo.x, alpha * wo.y, wo.z));
    Vec3f t1 = vh.z < 0.999f ? normalize(cross(Vec3f(0, 0, 1), vh)) : Vec3f(1, 0, 0);
    Vec3f t2 = cross(vh, t1);
    float r = std::sqrt(u.x);
    float phi = kTwoPi * u.y;
    float p1 = r * std::cos(phi);
    float p2 = r * std::sin(phi);
    float s = 0.5f * (1.0f + vh.z);
    p2 = (1.0f - s) * safe_sqrt(1.0f - p1 * p1) + s * p2;
    Vec3f nh = t1 * p1 + t2 * p2 + vh * safe_sqrt(1.0f - p1 * p1 - p2 * p2);
    return normalize(Vec3f(alpha * nh.x, alpha * nh.y, std::max(nh.z, 1e-6f)));
}

// solid-angle pdf of wi under the visible-normal strategy
float vndf_pdf(const Vec3f &wi, const Vec3f &wo, float alpha) {
    Vec3f h = normalize(wi + wo);
    float cos_ho = dot(h, wo);
    if (cos_ho <= 0 || h.z <= 0) return 0.0f;
    float dv = smith_g1(alpha, wo) * ggx_d_iso(alpha, h.z) * cos_ho / wo.z;
    return dv / (4.0f * cos_ho);
}

}  // namespace

Vec3f disney_eval(const MaterialSample &m, const Vec3f &wi_in, const Vec3f &wo_in) {
    Vec3f wi = wi_in, wo = wo_in;
    if (wo.z < 0) {  // double-sided: mirror both through the surface plane
        wi.z = -wi.z;
        wo.z = -wo.z;
    }
    if (wo.z < kGrazeEps || wi.z < kGrazeEps) return Vec3f(0);

    Vec3f fd = m.basecolor * ((1.0f - m.metallic) / kPi);
    Vec3f h = normalize(wi + wo);
    float d = ggx_d_iso(m.alpha, h.z);
    float g = smith_g2(m.alpha, wi, wo);
    float cos_ho = dot(h, wo);
    Vec3f fresnel = schlick(m.basecolor, cos_ho) * m.metallic +
                    schlick(Vec3f(m.specular), cos_ho) * (1.0f - m.metallic);
    Vec3f fs = fresnel * (d * g / (4.0f * wi.z * wo.z));
    return fd + fs;
}

float disney_pdf(const MaterialSample &m, const Vec3f &wi_in, const Vec3f &wo_in) {
    Vec3f wi = wi_in, wo = wo_in;
    if (wo.z < 0) {
        wi.z = -wi.z;
        wo.z = -wo.z;
    }
    if (wo.z < kGrazeEps || wi.z < kGrazeEps) return 0.0f;
    float pd = diffuse_select_prob(m);
    return pd * wi.z * kInvPi + (1.0f - pd) * vndf_pdf(wi, wo, m.alpha);
}

Vec3f disney_sample(const MaterialSample &m, const Vec3f &wo, Pcg32 &rng, Vec3f *wi, float *pdf) {
    *pdf = 0.0f;
    if (std::fabs(wo.z) < kGrazeEps) return Vec3f(0);
    float flip = wo.z < 0 ? -1.0f : 1.0f;  // sample on wo's side
    Vec3f wo_up = Vec3f(wo.x, wo.y, flip * wo.z);

    Vec3f wi_up;
    float pd = diffuse_select_prob(m);
    if (rng.next_float() < pd) {
        wi_up = sample_cosine_hemisphere(rng.next_vec2());
    } else {
        Vec3f h = sample_ggx_vndf(wo_up, m.alpha, rng.next_vec2());
        wi_up = h * (2.0f * dot(wo_up, h)) - wo_up;
        if (wi_up.z <= 0) return Vec3f(0);
    }
    float p = pd * wi_up.z * kInvPi + (1.0f - pd) * vndf_pdf(wi_up, wo_up, m.alpha);
    if (p <= 0) return Vec3f(0);
    *wi = Vec3f(wi_up.x, wi_up.y, flip * wi_up.z);
    *pdf = p;
    return disney_eval(m, wi_up, wo_up);
}

}  // namespace vlod
