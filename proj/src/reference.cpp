// SPDX-License-Identifier: Apache-2.0
#include "vlod/reference.h"

#include "vlod/disney.h"
#include "vlod/parallel.h"

namespace vlod {

namespace {

constexpr float kShadowEps = 1e-3f;

inline float mis_weight(float pdf_a, float pdf_b) { return pdf_a / (pdf_a + pdf_b); }

// radiance from delta lights: exact sampling, no MIS partner
Vec3f shade_delta_lights(const TriangleScene &scene, const Bvh &bvh, const Hit &hit,
                         const MaterialSample &mat, const Vec3f &wo_local) {
    Vec3f sum(0);
    for (const DirectionalLight &l : scene.dir_lights) {
        Vec3f wi_local = hit.frame.to_local(l.to_light);
        Vec3f f = disney_eval(mat, wi_local, wo_local);
        if (max_component(f) <= 0) continue;
        Ray shadow{hit.position + hit.ng * (dot(l.to_light, hit.ng) > 0 ? kShadowEps : -kShadowEps),
                   l.to_light, 1e-4f, kInf};
        if (bvh.occluded(shadow)) continue;
        sum = sum + f * l.radiance * std::fabs(wi_local.z);
    }
    for (const PointLight &l : scene.point_lights) {
        Vec3f delta = l.position - hit.position;
        float dist2 = dot(delta, delta);
        if (dist2 <= 1e-12f) continue;
        float dist = std::sqrt(dist2);
        Vec3f dir = delta / dist;
        Vec3f wi_local = hit.frame.to_local(dir);
        Vec3f f = disney_eval(mat, wi_local, wo_local);
        if (max_component(f) <= 0) continue;
        Ray shadow{hit.position + hit.ng * (dot(dir, hit.ng) > 0 ? kShadowEps : -kShadowEps), dir,
                   1e-4f, dist - kShadowEps};
        if (bvh.occluded(shadow)) continue;
        sum = sum + f * l.intensity * (std::fabs(wi_local.z) / dist2);
    }
    return sum;
}

}  // namespace

Vec3f shade_direct(const TriangleScene &scene, const Bvh &bvh, const Hit &hit, const Vec3f &wo,
                   Pcg32 &rng) {
    Vec3f wo_local = hit.frame.to_local(wo);
    MaterialSample mat = scene.material_at(hit.tri, hit.uv);
    Vec3f radiance = shade_delta_lights(scene, bvh, hit, mat, wo_local);
    if (!scene.has_env) return radiance;

    // light strategy: sample the environment map
    {
        Vec3f dir;
        float pdf_env;
        Vec3f le = scene.env.sample(rng.next_vec2(), &dir, &pdf_env);
        if (pdf_env > 0 && max_component(le) > 0) {
            Vec3f wi_local = hit.frame.to_local(dir);
            Vec3f f = disney_eval(mat, wi_local, wo_local);
            if (max_component(f) > 0) {
                Ray shadow{
                    hit.position + hit.ng * (dot(dir, hit.ng) > 0 ? kShadowEps : -kShadowEps), dir,
                    1e-4f, kInf};
                if (!bvh.occluded(shadow)) {
                    float w = mis_weight(pdf_env, disney_pdf(mat, wi_local, wo_local));
                    radiance = radiance + f * le * (std::fabs(wi_local.z) * w / pdf_env);
                }
            }
        }
    }

    // BRDF strategy: a material sample that escapes picks up the environment
    {
        Vec3f wi_local;
        float pdf_bsdf;
        Vec3f f = disney_sample(mat, wo_local, rng, &wi_local, &pdf_bsdf);
        if (pdf_bsdf > 0 && max_component(f) > 0) {
            Vec3f dir = hit.frame.to_world(wi_local);
            Ray r{hit.position + hit.ng * (dot(dir, hit.ng) > 0 ? kShadowEps : -kShadowEps), dir,
                  1e-4f, kInf};
            if (!bvh.occluded(r)) {
                float w = mis_weight(pdf_bsdf, scene.env.pdf(dir));
                radiance =
                    radiance + f * scene.env.eval(dir) * (std::fabs(wi_local.z) * w / pdf_bsdf);
            }
        }
    }
    return radiance;
}

ImageBuffer render_reference(const TriangleScene &scene, const Bvh &bvh, int spp, uint64_t seed) {
    const Camera &cam = scene.camera;
    ImageBuffer img(cam.width, cam.height);
    parallel_for(int64_t(cam.width) * cam.height, [&](int64_t pix) {
        int px = int(pix % cam.width), py = int(pix / cam.width);
        Pcg32 rng = make_rng(seed, 0x72656e64u, uint64_t(pix));
        Vec3f acc(0);
        for (int s = 0; s < spp; ++s) {
            Vec2f jitter = rng.next_vec2();  // box pixel filter
            Vec3f o, d;
            cam.generate_ray(float(px) + jitter.x, float(py) + jitter.y, &o, &d);
            Ray ray{o, d, 1e-4f, kInf};
            Hit hit;
            if (bvh.intersect(ray, &hit))
                acc = acc + shade_direct(scene, bvh, hit, d * -1.0f, rng);
            else if (scene.has_env)
                acc = acc + scene.env.eval(d);
        }
        img.at(px, py) = acc / float(spp);
    });
    return img;
}

}  // namespace vlod
