// SPDX-License-Identifier: Apache-2.0
#include "vlod/scene.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "vlod/sggx.h"

namespace vlod {

// ------------------------------------------------------------ material eval

Vec3f TexParam::eval(const Vec2f &uv) const {
    if (image.pixels.empty()) return value;
    if (!nearest) return image.sample_bilinear(uv.x, uv.y);
    int x = clamp(int(uv.x * float(image.width)), 0, image.width - 1);
    int y = clamp(int(uv.y * float(image.height)), 0, image.height - 1);
    return image.at(x, y);
}

// ------------------------------------------------------------- environment

namespace {

inline Vec3f latlong_dir(float u, float v) {
    float theta = v * kPi, phi = u * kTwoPi;
    float st = std::sin(theta);
    return {st * std::cos(phi), st * std::sin(phi), std::cos(theta)};
}

inline Vec2f latlong_uv(const Vec3f &d) {
    float theta = std::acos(clamp(d.z, -1.0f, 1.0f));
    float phi = std::atan2(d.y, d.x);
    if (phi < 0) phi += kTwoPi;
    return {phi / kTwoPi, theta / kPi};
}

inline float luminance(const Vec3f &c) { return 0.2126f * c.x + 0.7152f * c.y + 0.0722f * c.z; }

// index of the first cdf entry > u, as a sample from the cdf
inline int sample_cdf(const float *cdf, int n, float u, float *pdf_bin) {
    int lo = 0, hi = n - 1;
    while (lo < hi) {
        int mid = (lo + hi) / 2;
        if (cdf[mid] <= u)
            lo = mid + 1;
        else
            hi = mid;
    }
    *pdf_bin = cdf[lo] - (lo > 0 ? cdf[lo - 1] : 0.0f);
    return lo;
}

}  // namespace

Vec3f EnvLight::eval(const Vec3f &dir) const {
    if (radiance.pixels.empty()) return scale;
    Vec2f uv = latlong_uv(dir);
    return radiance.sample_bilinear(uv.x, uv.y) * scale;
}

void EnvLight::build_distribution() {
    if (radiance.pixels.empty()) {  // constant: keep the uniform-sphere path
        row_cdf_.clear();
        col_cdf_.clear();
        pdf_uv_.clear();
        return;
    }
    int w = std::max(radiance.width, 1), h = std::max(radiance.height, 1);
    row_cdf_.assign(h, 0.0f);
    col_cdf_.assign(size_t(w) * h, 0.0f);
    pdf_uv_.assign(size_t(w) * h, 0.0f);
    double total = 0;
    std::vector<double> row_sum(h, 0.0);
    for (int y = 0; y < h; ++y) {
        // sin(theta) folds in the shrinking solid angle toward the poles
        double st = std::sin((double(y) + 0.5) / h * kPi);
        double acc = 0;
        for (int x = 0; x < w; ++x) {
            double lum = radiance.pixels.empty()
                             ? 1.0
                             : double(luminance(radiance.at(x, y) * scale));
            acc += std::max(lum, 1e-9) * st;
            col_cdf_[size_t(y) * w + x] = float(acc);
        }
        row_sum[y] = acc;
        total += acc;
        for (int x = 0; x < w; ++x) col_cdf_[size_t(y) * w + x] /= float(std::max(acc, 1e-30));
    }
    double acc = 0;
    for (int y = 0; y < h; ++y) {
        acc += row_sum[y];
        row_cdf_[y] = float(acc / total);
        for (int x = 0; x < w; ++x) {
            double cell = (x > 0 ? col_cdf_[size_t(y) * w + x] - col_cdf_[size_t(y) * w + x - 1]
                                 : col_cdf_[size_t(y) * w + x]) *
                          row_sum[y] / total;
            pdf_uv_[size_t(y) * w + x] = float(cell * double(w) * double(h));
        }
    }
}

Vec3f EnvLight::sample(const Vec2f &u, Vec3f *dir, float *pdf) const {
    if (row_cdf_.empty()) {  // constant environment: uniform over the sphere
        *dir = latlong_dir(u.x, std::acos(1.0f - 2.0f * u.y) / kPi);
        *pdf = 1.0f / kFourPi;
        return scale;
    }
    int w = radiance.width > 0 ? radiance.width : 1;
    int h = int(row_cdf_.size());
    float pr, pc;
    int y = sample_cdf(row_cdf_.data(), h, u.y, &pr);
    int x = sample_cdf(col_cdf_.data() + size_t(y) * w, w, u.x, &pc);
    // uniform within the chosen texel
    float fu = (float(x) + 0.5f) / float(w);
    float fv = (float(y) + 0.5f) / float(h);
    *dir = latlong_dir(fu, fv);
    *pdf = this->pdf(*dir);
    if (*pdf <= 0) return Vec3f(0);
    return eval(*dir);
}

float EnvLight::pdf(const Vec3f &dir) const {
    if (row_cdf_.empty()) return 1.0f / kFourPi;
    int w = radiance.width > 0 ? radiance.width : 1;
    int h = int(row_cdf_.size());
    Vec2f uv = latlong_uv(dir);
    int x = clamp(int(uv.x * float(w)), 0, w - 1);
    int y = clamp(int(uv.y * float(h)), 0, h - 1);
    float st = std::sin(uv.y * kPi);
    if (st <= 1e-8f) return 0.0f;
    return pdf_uv_[size_t(y) * w + x] / (2.0f * kPi * kPi * st);
}

// ------------------------------------------------------------------ camera

Camera Camera::look_at(const Vec3f &origin, const Vec3f &target, const Vec3f &up, float fov_y_deg,
                       int width, int height) {
    Camera c;
    c.origin = origin;
    Vec3f fwd = normalize(target - origin);
    Vec3f right = normalize(cross(fwd, up));
    Vec3f cam_up = cross(right, fwd);
    c.frame = Frame(right, cam_up, fwd);
    c.tan_half_fov = std::tan(0.5f * fov_y_deg * kPi / 180.0f);
    c.width = width;
    c.height = height;
    return c;
}

void Camera::generate_ray(float px, float py, Vec3f *o, Vec3f *d) const {
    float aspect = float(width) / float(height);
    float sx = (2.0f * px / float(width) - 1.0f) * tan_half_fov * aspect;
    float sy = (1.0f - 2.0f * py / float(height)) * tan_half_fov;
    *o = origin;
    *d = normalize(frame.to_world(Vec3f(sx, sy, 1.0f)));
}

// ------------------------------------------------------------------- scene

Bounds3 TriangleScene::bounds() const {
    Bounds3 b;
    for (const Tri &t : triangles)
        for (int k = 0; k < 3; ++k) b.expand(positions[t.p[k]]);
    return b;
}

void TriangleScene::triangle_points(int tri, Vec3f p[3]) const {
    const Tri &t = triangles[tri];
    for (int k = 0; k < 3; ++k) p[k] = positions[t.p[k]];
}

Vec3f TriangleScene::shading_normal(int tri, float bu, float bv) const {
    const Tri &t = triangles[tri];
    if (t.n[0] >= 0) {
        Vec3f n = normals[t.n[0]] * (1.0f - bu - bv) + normals[t.n[1]] * bu + normals[t.n[2]] * bv;
        float len = length(n);
        if (len > 1e-12f) return n / len;
    }
    Vec3f p[3];
    triangle_points(tri, p);
    return normalize(cross(p[1] - p[0], p[2] - p[0]));
}

Vec2f TriangleScene::uv_at(int tri, float bu, float bv) const {
    const Tri &t = triangles[tri];
    if (t.t[0] < 0) return {0.5f, 0.5f};
    return uvs[t.t[0]] * (1.0f - bu - bv) + uvs[t.t[1]] * bu + uvs[t.t[2]] * bv;
}

MaterialSample TriangleScene::material_at(int tri, const Vec2f &uv) const {
    const Material &m = materials[triangles[tri].material];
    MaterialSample s;
    s.basecolor = max(m.basecolor.eval(uv), Vec3f(0));
    s.alpha = clamp(m.roughness.eval(uv).x, kAlphaMin, 1.0f);
    s.metallic = clamp(m.metallic.eval(uv).x, 0.0f, 1.0f);
    s.specular = clamp(m.specular.eval(uv).x, 0.0f, 1.0f);
    return s;
}

void TriangleScene::validate() const {
    if (materials.empty()) throw std::runtime_error("scene has no materials");
    for (size_t i = 0; i < triangles.size(); ++i) {
        const Tri &t = triangles[i];
        for (int k = 0; k < 3; ++k) {
            if (t.p[k] < 0 || t.p[k] >= int(positions.size()))
                throw std::runtime_error("triangle position index out of range");
            if (t.n[k] >= int(normals.size()))
                throw std::runtime_error("triangle normal index out of range");
            if (t.t[k] >= int(uvs.size()))
                throw std::runtime_error("triangle uv index out of range");
        }
        if (t.material < 0 || t.material >= int(materials.size()))
            throw std::runtime_error("triangle material index out of range");
    }
}

// -------------------------------------------------------------- OBJ loader

namespace {

int resolve_index(int idx, int count) {
    if (idx > 0) return idx - 1;
    if (idx < 0) return count + idx;
    return -1;
}

struct ObjVertex {
    int p = -1, t = -1, n = -1;
};

ObjVertex parse_vertex(const std::string &tok, int np, int nt, int nn) {
    ObjVertex v;
    int vals[3] = {0, 0, 0};
    size_t start = 0;
    for (int slot = 0; slot < 3 && start <= tok.size(); ++slot) {
        size_t end = tok.find('/', start);
        std::string piece = tok.substr(start, end == std::string::npos ? end : end - start);
        if (!piece.empty()) vals[slot] = std::stoi(piece);
        if (end == std::string::npos) break;
        start = end + 1;
    }
    v.p = resolve_index(vals[0], np);
    v.t = resolve_index(vals[1], nt);
    v.n = resolve_index(vals[2], nn);
    return v;
}

}  // namespace

void load_obj(const std::string &path, TriangleScene *scene, int material_id, const Mat3 &linear,
              const Vec3f &translate) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open OBJ file: " + path);

    int base_p = int(scene->positions.size());
    int base_t = int(scene->uvs.size());
    int base_n = int(scene->normals.size());
    int first_tri = int(scene->triangles.size());
    std::vector<Vec3f> file_normals;
    // normals transform with the inverse transpose to stay perpendicular
    Mat3 normal_m = linear.inverse().transposed();

    std::string line;
    while (std::getline(in, line)) {
        if (line.size() >= 2 && line[0] == 'v' && line[1] == ' ') {
            std::istringstream ss(line.substr(2));
            Vec3f p;
            ss >> p.x >> p.y >> p.z;
            scene->positions.push_back(linear * p + translate);
        } else if (line.rfind("vn ", 0) == 0) {
            std::istringstream ss(line.substr(3));
            Vec3f n;
            ss >> n.x >> n.y >> n.z;
            file_normals.push_back(normalize(normal_m * n));
        } else if (line.rfind("vt ", 0) == 0) {
            std::istringstream ss(line.substr(3));
            Vec2f t{0, 0};
            ss >> t.x >> t.y;
            scene->uvs.push_back(t);
        } else if (line.rfind("f ", 0) == 0) {
            std::istringstream ss(line.substr(2));
            std::vector<ObjVertex> face;
            std::string tok;
            while (ss >> tok)
                face.push_back(parse_vertex(tok, int(scene->positions.size()) - base_p,
                                            int(scene->uvs.size()) - base_t,
                                            int(file_normals.size())));
            for (size_t k = 2; k < face.size(); ++k) {
                TriangleScene::Tri tri;
                const ObjVertex *fv[3] = {&face[0], &face[k - 1], &face[k]};
                for (int c = 0; c < 3; ++c) {
                    if (fv[c]->p < 0) throw std::runtime_error("OBJ face without position: " + path);
                    tri.p[c] = base_p + fv[c]->p;
                    tri.t[c] = fv[c]->t >= 0 ? base_t + fv[c]->t : -1;
                    tri.n[c] = fv[c]->n;  // patched below once normals are final
                }
                tri.material = material_id;
                scene->triangles.push_back(tri);
            }
        }
    }

    if (!file_normals.empty()) {
        for (size_t i = first_tri; i < scene->triangles.size(); ++i)
            for (int c = 0; c < 3; ++c) {
                int &n = scene->triangles[i].n[c];
                n = n >= 0 ? base_n + n : -1;
            }
        scene->normals.insert(scene->normals.end(), file_normals.begin(), file_normals.end());
        return;
    }

    // no normals in the file: area-weighted smooth normals per position
    std::vector<Vec3f> acc(scene->positions.size() - base_p, Vec3f(0));
    for (size_t i = first_tri; i < scene->triangles.size(); ++i) {
        TriangleScene::Tri &t = scene->triangles[i];
        Vec3f p0 = scene->positions[t.p[0]];
        Vec3f n = cross(scene->positions[t.p[1]] - p0, scene->positions[t.p[2]] - p0);
        for (int c = 0; c < 3; ++c) acc[t.p[c] - base_p] = acc[t.p[c] - base_p] + n;
    }
    for (Vec3f &n : acc) {
        float len = length(n);
        scene->normals.push_back(len > 1e-12f ? n / len : Vec3f(0, 0, 1));
    }
    for (size_t i = first_tri; i < scene->triangles.size(); ++i)
        for (int c = 0; c < 3; ++c)
            scene->triangles[i].n[c] = base_n + scene->triangles[i].p[c] - base_p;
}

// ------------------------------------------------------------ JSON scene

namespace {

using nlohmann::json;

Vec3f json_vec3(const json &j, const Vec3f &fallback = Vec3f(0)) {
    if (j.is_number()) return Vec3f(j.get<float>());
    if (j.is_array() && j.size() == 3)
        return {j[0].get<float>(), j[1].get<float>(), j[2].get<float>()};
    return fallback;
}

TexParam parse_param(const json &j, const std::filesystem::path &dir, float fallback,
                     bool srgb_texture) {
    TexParam p;
    p.value = Vec3f(fallback);
    if (j.is_null()) return p;
    if (j.is_string()) {
        p.image = read_image((dir / j.get<std::string>()).string(), srgb_texture);
        return p;
    }
    if (j.is_object()) {
        if (j.contains("image"))
            p.image = read_image((dir / j["image"].get<std::string>()).string(), srgb_texture);
        if (j.contains("value")) p.value = json_vec3(j["value"], p.value);
        p.nearest = j.value("nearest", false);
        return p;
    }
    p.value = json_vec3(j, p.value);
    return p;
}

}  // namespace

TriangleScene load_scene(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error &e) {
        throw std::runtime_error("scene parse error in " + path + ": " + e.what());
    }
    if (doc.value("scene_version", 0) != 1)
        throw std::runtime_error("unsupported scene_version (expected 1): " + path);
    std::filesystem::path dir = std::filesystem::path(path).parent_path();

    TriangleScene scene;
    for (const json &jm : doc.value("materials", json::array())) {
        Material m;
        m.name = jm.value("name", "material" + std::to_string(scene.materials.size()));
        m.basecolor = parse_param(jm.value("basecolor", json()), dir, 0.5f, true);
        m.roughness = parse_param(jm.value("roughness", json()), dir, 0.5f, false);
        m.metallic = parse_param(jm.value("metallic", json()), dir, 0.0f, false);
        m.specular = parse_param(jm.value("specular", json()), dir, 0.04f, false);
        scene.materials.push_back(std::move(m));
    }
    if (scene.materials.empty()) scene.materials.push_back(Material{.name = "default"});

    auto material_index = [&](const json &j) -> int {
        if (j.is_number_integer()) {
            int idx = j.get<int>();
            if (idx < 0 || idx >= int(scene.materials.size()))
                throw std::runtime_error("mesh material index out of range");
            return idx;
        }
        std::string name = j.get<std::string>();
        for (size_t i = 0; i < scene.materials.size(); ++i)
            if (scene.materials[i].name == name) return int(i);
        throw std::runtime_error("unknown material name: " + name);
    };

    for (const json &jm : doc.value("meshes", json::array())) {
        int mat = jm.contains("material") ? material_index(jm["material"]) : 0;
        Vec3f s = json_vec3(jm.value("scale", json()), Vec3f(1));
        Vec3f t = json_vec3(jm.value("translate", json()), Vec3f(0));
        load_obj((dir / jm["obj"].get<std::string>()).string(), &scene, mat,
                 Mat3::diag(s.x, s.y, s.z), t);
    }

    for (const json &jl : doc.value("lights", json::array())) {
        std::string type = jl.value("type", "");
        if (type == "env") {
            if (scene.has_env) throw std::runtime_error("scene has more than one env light");
            scene.has_env = true;
            if (jl.contains("image"))
                scene.env.radiance = read_image((dir / jl["image"].get<std::string>()).string(),
                                                false);
            scene.env.scale = json_vec3(jl.value("scale", json()), Vec3f(1));
            scene.env.build_distribution();
        } else if (type == "directional") {
            DirectionalLight l;
            l.to_light = normalize(json_vec3(jl.at("to_light")));
            l.radiance = json_vec3(jl.value("radiance", json()), Vec3f(1));
            scene.dir_lights.push_back(l);
        } else if (type == "point") {
            PointLight l;
            l.position = json_vec3(jl.at("position"));
            l.intensity = json_vec3(jl.value("intensity", json()), Vec3f(1));
            scene.point_lights.push_back(l);
        } else {
            throw std::runtime_error("unknown light type: " + type);
        }
    }

    if (doc.contains("camera")) {
        const json &jc = doc["camera"];
        scene.camera = Camera::look_at(
            json_vec3(jc.value("origin", json()), Vec3f(0, 0, 5)),
            json_vec3(jc.value("look_at", json()), Vec3f(0)),
            json_vec3(jc.value("up", json()), Vec3f(0, 0, 1)), jc.value("fov_y_deg", 45.0f),
            jc.value("width", 256), jc.value("height", 256));
    }

    scene.validate();
    return scene;
}

}  // namespace vlod
