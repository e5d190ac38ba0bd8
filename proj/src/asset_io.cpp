#include "clothsim/asset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <string_view>

#include <fmt/format.h>
#include <png.h>

#include "clothsim/errors.hpp"

namespace clothsim {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, out);
    return ec == std::errc{} && ptr == end;
}

}  // namespace

TriangleMesh parse_obj(const std::string& text, const std::string& source_name, ObjLoadReport* report) {
    std::vector<Vec3d> vertices;
    std::vector<Triangle> triangles;
    ObjLoadReport rep;

    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = split_ws(line);
        if (tok.empty()) continue;
        const std::string_view kw = tok[0];

        if (kw == "v") {
            if (tok.size() != 4 && tok.size() != 5) {
                throw ParseError(source_name, line_no, "vertex needs 3 coordinates");
            }
            Vec3d v;
            for (int k = 0; k < 3; ++k) {
                if (!parse_number(tok[k + 1], v[k]) || !std::isfinite(v[k])) {
                    throw ParseError(source_name, line_no, "bad vertex coordinate '" + std::string(tok[k + 1]) + "'");
                }
            }
            vertices.push_back(v);
        } else if (kw == "f") {
            if (tok.size() < 4) throw ParseError(source_name, line_no, "face needs at least 3 vertices");
            std::vector<std::uint32_t> poly;
            poly.reserve(tok.size() - 1);
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::string_view ref = tok[k].substr(0, tok[k].find('/'));
                long long idx = 0;
                if (!parse_number(ref, idx) || idx == 0) {
                    throw ParseError(source_name, line_no, "bad face index '" + std::string(tok[k]) + "'");
                }
                const long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(vertices.size()) + idx;
                if (resolved < 0 || resolved >= static_cast<long long>(vertices.size())) {
                    throw ParseError(source_name, line_no, "face index " + std::to_string(idx) + " out of range");
                }
                poly.push_back(static_cast<std::uint32_t>(resolved));
            }
            ++rep.polygons;
            for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
                const Triangle t{poly[0], poly[k], poly[k + 1]};
                const double area =
                    0.5 * length(cross(vertices[t[1]] - vertices[t[0]], vertices[t[2]] - vertices[t[0]]));
                if (area > kMinTriangleArea) {
                    triangles.push_back(t);
                } else {
                    ++rep.dropped_degenerate;
                }
            }
        } else if (kw == "vt" || kw == "vn" || kw == "vp" || kw == "g" || kw == "o" || kw == "s" ||
                   kw == "usemtl" || kw == "mtllib") {
            continue;
        } else if (kw == "l" || kw == "p" || kw == "curv" || kw == "curv2" || kw == "surf") {
            throw ParseError(source_name, line_no, "non-polygonal element '" + std::string(kw) + "'");
        } else {
            throw ParseError(source_name, line_no, "unrecognised statement '" + std::string(kw) + "'");
        }
    }
    if (triangles.empty()) throw ParseError(source_name, line_no, "no polygonal faces");

    rep.vertices = vertices.size();
    rep.triangles = triangles.size();
    if (report) *report = rep;
    return TriangleMesh::make(std::move(vertices), std::move(triangles));
}

TriangleMesh load_obj(const std::filesystem::path& path, ObjLoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mesh file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_obj(buf.str(), path.string(), report);
}

void write_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    for (const Vec3d& v : mesh.vertices) out << fmt::format("v {:.17g} {:.17g} {:.17g}\n", v.x, v.y, v.z);
    for (const Triangle& t : mesh.triangles) out << fmt::format("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1);
    if (!out) throw IoError("write failed for " + path.string());
}

std::string_view to_string(Backend b) { return b == Backend::cpu ? "cpu" : "gpu"; }

std::optional<Backend> parse_backend(std::string_view s) {
    if (s == "cpu") return Backend::cpu;
    if (s == "gpu") return Backend::gpu;
    return std::nullopt;
}

void FrameStats::set_wall_ms(double ms) {
    wall_ms = std::max(ms, 1e-6);
    fps = 1000.0 / wall_ms;
}

std::string format_stats_csv(std::span<const FrameStats> stats) {
    std::string out(kStatsCsvHeader);
    out += '\n';
    for (const FrameStats& s : stats) {
        out += fmt::format("{},{:.6f},{:.3f},{},{},{},{},{}\n", s.frame, s.wall_ms, s.fps, s.nodes, s.springs,
                           s.obstacle_triangles, s.collision_hits, to_string(s.backend));
    }
    return out;
}

void write_stats_csv(std::span<const FrameStats> stats, const std::filesystem::path& path) {
    if (stats.empty()) throw IoError("refusing to write an empty stats table");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << format_stats_csv(stats);
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<FrameStats> read_stats_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string name = path.string();
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kStatsCsvHeader) throw ParseError(name, 1, "unexpected header");

    std::vector<FrameStats> rows;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest = rest.substr(pos + 1)) {
            f.push_back(rest.substr(0, pos));
        }
        f.push_back(rest);
        if (f.size() != 8) throw ParseError(name, line_no, "expected 8 fields");
        FrameStats s;
        const bool ok = parse_number(f[0], s.frame) && parse_number(f[1], s.wall_ms) && parse_number(f[2], s.fps) &&
                        parse_number(f[3], s.nodes) && parse_number(f[4], s.springs) &&
                        parse_number(f[5], s.obstacle_triangles) && parse_number(f[6], s.collision_hits);
        const auto backend = parse_backend(f[7]);
        if (!ok || !backend) throw ParseError(name, line_no, "malformed field");
        s.backend = *backend;
        rows.push_back(s);
    }
    return rows;
}

Image render_depth(std::span<const SnapshotMesh> meshes, const CameraConfig& cam) {
    Image img;
    img.width = cam.width;
    img.height = cam.height;
    img.rgb.assign(std::size_t{cam.width} * cam.height * 3, cam.background);

    const Vec3d fwd = normalize(cam.direction);
    const Vec3d right = normalize(cross(fwd, cam.up));
    const Vec3d up = cross(right, fwd);
    const double half_w = cam.half_width;
    const double half_h = cam.half_width * cam.height / cam.width;

    struct Projected {
        double x, y, depth;
    };
    auto project = [&](const Vec3d& p) {
        const Vec3d d = p - cam.center;
        return Projected{(dot(d, right) / half_w + 1.0) * 0.5 * cam.width,
                         (1.0 - dot(d, up) / half_h) * 0.5 * cam.height, dot(d, fwd)};
    };

    double dmin = std::numeric_limits<double>::infinity();
    double dmax = -dmin;
    for (const SnapshotMesh& m : meshes) {
        for (const Triangle& t : m.triangles) {
            for (std::uint32_t v : t) {
                const double d = dot(m.positions[v] - cam.center, fwd);
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
            }
        }
    }
    const double span = dmax > dmin ? dmax - dmin : 1.0;

    std::vector<double> zbuf(std::size_t{cam.width} * cam.height, std::numeric_limits<double>::infinity());
    for (const SnapshotMesh& m : meshes) {
        for (const Triangle& t : m.triangles) {
            const Projected a = project(m.positions[t[0]]);
            const Projected b = project(m.positions[t[1]]);
            const Projected c = project(m.positions[t[2]]);
            const double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
            if (std::abs(area) < 1e-12) continue;
            const auto x0 = static_cast<long>(std::max(0.0, std::floor(std::min({a.x, b.x, c.x}) - 0.5)));
            const auto x1 = static_cast<long>(std::min<double>(cam.width - 1, std::ceil(std::max({a.x, b.x, c.x}))));
            const auto y0 = static_cast<long>(std::max(0.0, std::floor(std::min({a.y, b.y, c.y}) - 0.5)));
            const auto y1 = static_cast<long>(std::min<double>(cam.height - 1, std::ceil(std::max({a.y, b.y, c.y}))));
            for (long y = y0; y <= y1; ++y) {
                for (long x = x0; x <= x1; ++x) {
                    const double px = x + 0.5;
                    const double py = y + 0.5;
                    const double w0 = ((b.x - px) * (c.y - py) - (b.y - py) * (c.x - px)) / area;
                    const double w1 = ((c.x - px) * (a.y - py) - (c.y - py) * (a.x - px)) / area;
                    const double w2 = 1.0 - w0 - w1;
                    if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
                    const double depth = w0 * a.depth + w1 * b.depth + w2 * c.depth;
                    const std::size_t pix = static_cast<std::size_t>(y) * cam.width + static_cast<std::size_t>(x);
                    if (depth >= zbuf[pix]) continue;
                    zbuf[pix] = depth;
                    const double shade = 55.0 + 200.0 * (1.0 - std::clamp((depth - dmin) / span, 0.0, 1.0));
                    for (int k = 0; k < 3; ++k) {
                        img.rgb[pix * 3 + k] = static_cast<std::uint8_t>(std::lround(std::clamp(shade * m.tint[k], 0.0, 255.0)));
                    }
                }
            }
        }
    }
    return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!file) throw IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed for " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::uint32_t y = 0; y < image.height; ++y) {
        png_write_row(png, image.rgb.data() + std::size_t{y} * image.width * 3);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void snapshot_png(std::span<const SnapshotMesh> meshes, const CameraConfig& camera,
                  const std::filesystem::path& path) {
    write_png(render_depth(meshes, camera), path);
}

}  // namespace clothsim
