// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "vlod/frame.h"
#include "vlod/image.h"
#include "vlod/vecmath.h"

namespace vlod {

// Material parameter that is either a constant or an image lookup.
// Scalar parameters use the x channel of the result.
struct TexParam {
    Vec3f value{0.5f, 0.5f, 0.5f};
    ImageBuffer image;    // empty -> constant
    bool nearest = false;  // nearest-neighbor lookup (used for roughness maps)

    Vec3f eval(const Vec2f &uv) const;
};

// Modified principled BRDF parameter set: roughness alpha, basecolor,
// metallic, and specular intensity, each constant or textured.
struct Material {
    std::string name;
    TexParam basecolor{Vec3f(0.8f)};  // rgb
    TexParam roughness{Vec3f(0.5f)};  // scalar
    TexParam metallic{Vec3f(0.0f)};   // scalar
    TexParam specular{Vec3f(0.5f)};   // scalar
};

// Point-evaluated material parameters.
struct MaterialSample {
    float alpha = 0.5f;
    Vec3f basecolor{0.5f, 0.5f, 0.5f};
    float metallic = 0.0f;
    float specular = 0.5f;
};

// Lat-long environment map (z-up: v = theta/pi from +z, u = phi/2pi) with a
// luminance-weighted distribution for light sampling.
struct EnvLight {
    ImageBuffer radiance;
    Vec3f scale{1, 1, 1};

    Vec3f eval(const Vec3f &dir) const;
    // sample a direction by map luminance; returns radiance and solid-angle pdf
    Vec3f sample(const Vec2f &u, Vec3f *dir, float *pdf) const;
    float pdf(const Vec3f &dir) const;
    void build_distribution();

  private:
    std::vector<float> row_cdf_;            // marginal over rows
    std::vector<float> col_cdf_;            // conditional per row, row-major
    std::vector<float> pdf_uv_;             // joint density on the unit square
};

struct DirectionalLight {
    Vec3f to_light{0, 0, 1};  // unit vector toward the light
    Vec3f radiance{1, 1, 1};
};

struct PointLight {
    Vec3f position{0, 0, 0};
    Vec3f intensity{1, 1, 1};  // radiant intensity, W/sr
};

struct Camera {
    Vec3f origin{0, 0, 0};
    Frame frame;          // n looks along the view direction
    float tan_half_fov = 0.414f;
    int width = 256, height = 256;

    static Camera look_at(const Vec3f &origin, const Vec3f &target, const Vec3f &up,
                          float fov_y_deg, int width, int height);
    // px, py in pixels, jitter in [0,1)^2 for the box filter
    void generate_ray(float px, float py, Vec3f *o, Vec3f *d) const;
};

struct TriangleScene {
    struct Tri {
        int p[3] = {0, 0, 0};
        int n[3] = {-1, -1, -1};
        int t[3] = {-1, -1, -1};
        int material = 0;
    };

    std::vector<Vec3f> positions;
    std::vector<Vec3f> normals;
    std::vector<Vec2f> uvs;
    std::vector<Tri> triangles;
    std::vector<Material> materials;

    bool has_env = false;
    EnvLight env;
    std::vector<DirectionalLight> dir_lights;
    std::vector<PointLight> point_lights;
    Camera camera;

    Bounds3 bounds() const;
    // positions/uv/shading normal of one triangle (normal falls back to
    // the geometric one when the mesh has none)
    void triangle_points(int tri, Vec3f p[3]) const;
    Vec3f shading_normal(int tri, float bu, float bv) const;
    Vec2f uv_at(int tri, float bu, float bv) const;
    MaterialSample material_at(int tri, const Vec2f &uv) const;

    void validate() const;  // throws std::runtime_error on broken indices
};

// Wavefront OBJ subset: v / vn / vt / f with fan triangulation; groups and
// materials in the file are ignored (the scene description assigns one
// material per mesh). Missing normals are replaced by area-weighted smooth
// vertex normals.
void load_obj(const std::string &path, TriangleScene *scene, int material_id,
              const Mat3 &linear = Mat3::identity(), const Vec3f &translate = Vec3f(0));

// Scene description document (JSON syntax, "scene_version": 1). Relative
// paths resolve against the document's directory.
TriangleScene load_scene(const std::string &path);

}  // namespace vlod
