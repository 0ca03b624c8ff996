#include "mlaforge/lf_decode.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "mlaforge/image_io.hpp"
#include "mlaforge/parallel.hpp"

namespace mlaforge {

using nlohmann::json;

DevignetteResult devignette(const Image<float>& raw, const Image<float>& white,
                            double black_level, double white_level) {
    if (raw.width() != white.width() || raw.height() != white.height())
        throw DecodeError("devignette: image size mismatch");
    if (!(black_level < white_level))
        throw DecodeError("devignette: black level must be below white level");

    float white_max = 0.0f;
    for (int y = 0; y < white.height(); ++y) {
        const float* row = white.row(y);
        for (int x = 0; x < white.width(); ++x)
            white_max = std::max(white_max, row[x]);
    }
    const float floor = 0.01f * white_max;

    DevignetteResult out;
    out.image = Image<float>(raw.width(), raw.height());
    out.mask = Image<uint8_t>(raw.width(), raw.height(), 1);
    for (int y = 0; y < raw.height(); ++y) {
        const float* rs = raw.row(y);
        const float* ws = white.row(y);
        float* dst = out.image.row(y);
        uint8_t* m = out.mask.row(y);
        for (int x = 0; x < raw.width(); ++x) {
            if (ws[x] < floor) {
                m[x] = 0;
                dst[x] = 0.0f;
                continue;
            }
            const double denom = ws[x] - black_level;
            const double v = (rs[x] - black_level) / denom;
            dst[x] = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

namespace {

// Malvar-He-Cutler kernels, x8
// clang-format off
constexpr float kGreenAtRB[25] = {
     0, 0, -1, 0,  0,
     0, 0,  2, 0,  0,
    -1, 2,  4, 2, -1,
     0, 0,  2, 0,  0,
     0, 0, -1, 0,  0};
constexpr float kSameRowRB[25] = {  // R at G in an R row (or B analog)
     0,  0, 0.5f, 0,  0,
     0, -1, 0,   -1,  0,
    -1,  4, 5,    4, -1,
     0, -1, 0,   -1,  0,
     0,  0, 0.5f, 0,  0};
constexpr float kSameColRB[25] = {  // transpose of kSameRowRB
     0,    0, -1,  0, 0,
     0,   -1,  4, -1, 0,
     0.5f, 0,  5,  0, 0.5f,
     0,   -1,  4, -1, 0,
     0,    0, -1,  0, 0};
constexpr float kDiagonalRB[25] = {  // R at B site (or B at R)
     0,     0, -1.5f, 0,  0,
     0,     2,  0,    2,  0,
    -1.5f,  0,  6,    0, -1.5f,
     0,     2,  0,    2,  0,
     0,     0, -1.5f, 0,  0};
// clang-format on

float apply_kernel(const Image<float>& img, int x, int y, const float* k) {
    double acc = 0.0;
    int idx = 0;
    for (int dy = -2; dy <= 2; ++dy) {
        const int yy = std::clamp(y + dy, 0, img.height() - 1);
        for (int dx = -2; dx <= 2; ++dx, ++idx) {
            if (k[idx] == 0.0f) continue;
            const int xx = std::clamp(x + dx, 0, img.width() - 1);
            acc += k[idx] * img.at(xx, yy);
        }
    }
    return static_cast<float>(acc / 8.0);
}

}  // namespace

RgbImage demosaic_malvar(const Image<float>& mosaic, BayerPattern pattern) {
    const int W = mosaic.width(), H = mosaic.height();
    RgbImage out{Image<float>(W, H), Image<float>(W, H), Image<float>(W, H)};
    Image<float>* planes[3] = {&out.r, &out.g, &out.b};
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const int ch = bayer_channel(pattern, x, y);
            const float v = mosaic.at(x, y);
            planes[ch]->at(x, y) = v;
            if (ch == 1) {
                // green site: R and B come from row or column neighbors
                const int right = bayer_channel(pattern, x + 1, y);
                if (right == 0) {  // R row
                    planes[0]->at(x, y) = apply_kernel(mosaic, x, y, kSameRowRB);
                    planes[2]->at(x, y) = apply_kernel(mosaic, x, y, kSameColRB);
                } else {  // B row
                    planes[2]->at(x, y) = apply_kernel(mosaic, x, y, kSameRowRB);
                    planes[0]->at(x, y) = apply_kernel(mosaic, x, y, kSameColRB);
                }
            } else {
                planes[1]->at(x, y) = apply_kernel(mosaic, x, y, kGreenAtRB);
                planes[2 - ch]->at(x, y) = apply_kernel(mosaic, x, y, kDiagonalRB);
            }
        }
    }
    return out;
}

AlignResult align_to_grid(const RgbImage& img, const Image<uint8_t>& mask,
                          const GridModel& grid, int jobs) {
    if (!(grid.spacing_px > 1.0))
        throw DecodeError("align_to_grid: invalid grid spacing");
    if (std::abs(grid.rotation_deg) > 5.0)
        throw DecodeError("align_to_grid: suspicious grid rotation");

    const int W = img.width(), H = img.height();
    const int k = static_cast<int>(std::ceil(grid.spacing_px - 1e-9));
    const double scale = k / grid.spacing_px;
    const double alpha = deg_to_rad(grid.rotation_deg);
    const Vec2 center{(W - 1) / 2.0, (H - 1) / 2.0};
    const Vec2 pivot = center + grid.offset_px;

    // forward: q = origin + scale * R(-alpha) (p - pivot)
    auto forward_raw = [&](const Vec2& p) {
        return rotate(p - pivot, -alpha) * scale;
    };
    double qx_min = 1e300, qx_max = -1e300, qy_min = 1e300, qy_max = -1e300;
    for (const Vec2& corner :
         {Vec2{0, 0}, Vec2{double(W - 1), 0}, Vec2{0, double(H - 1)},
          Vec2{double(W - 1), double(H - 1)}}) {
        const Vec2 q = forward_raw(corner);
        qx_min = std::min(qx_min, q.x);
        qx_max = std::max(qx_max, q.x);
        qy_min = std::min(qy_min, q.y);
        qy_max = std::max(qy_max, q.y);
    }
    const Vec2 origin{std::ceil(-qx_min), std::ceil(-qy_min)};

    AlignResult out;
    out.lattice.k = k;
    out.lattice.origin = origin;
    out.lattice.row_pitch = std::sqrt(3.0) * k / 2.0;
    out.lattice.width = static_cast<int>(std::floor(qx_max + origin.x)) + 1;
    out.lattice.height = static_cast<int>(std::floor(qy_max + origin.y)) + 1;

    const int OW = out.lattice.width, OH = out.lattice.height;
    out.image = RgbImage{Image<float>(OW, OH), Image<float>(OW, OH),
                         Image<float>(OW, OH)};
    out.mask = Image<uint8_t>(OW, OH, 0);

    Image<float> maskf(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            maskf.at(x, y) = mask.at(x, y) ? 1.0f : 0.0f;

    const double inv_scale = 1.0 / scale;
    parallel_for(
        0, OH,
        [&](int64_t yy) {
            const int y = static_cast<int>(yy);
            for (int x = 0; x < OW; ++x) {
                const Vec2 q{static_cast<double>(x), static_cast<double>(y)};
                const Vec2 p = rotate((q - origin) * inv_scale, alpha) + pivot;
                if (p.x < 0 || p.x > W - 1 || p.y < 0 || p.y > H - 1) continue;
                out.image.r.at(x, y) =
                    static_cast<float>(img.r.sample_bilinear(p.x, p.y));
                out.image.g.at(x, y) =
                    static_cast<float>(img.g.sample_bilinear(p.x, p.y));
                out.image.b.at(x, y) =
                    static_cast<float>(img.b.sample_bilinear(p.x, p.y));
                out.mask.at(x, y) = maskf.sample_bilinear(p.x, p.y) >= 0.999;
            }
        },
        jobs, 16);

    // lattice index ranges covering the output
    const double dy = out.lattice.row_pitch;
    out.lattice.j_min = static_cast<int>(std::ceil(-origin.y / dy));
    out.lattice.j_max = static_cast<int>(std::floor((OH - 1 - origin.y) / dy));
    out.lattice.i_min = static_cast<int>(std::floor(-origin.x / k));
    out.lattice.i_max = static_cast<int>(std::ceil((OW - 1 - origin.x) / k));
    return out;
}

namespace {

Vec2 lens_position(const AlignedLattice& lat, int i, int j) {
    const double shift = (std::abs(j) % 2 == 1) ? 0.5 : 0.0;
    return {lat.origin.x + (i + shift) * lat.k, lat.origin.y + j * lat.row_pitch};
}

}  // namespace

LightField slice_to_4d(const AlignResult& aligned, int patch_size, int jobs) {
    const int P = patch_size > 0 ? patch_size : aligned.lattice.k;
    LightField lf;
    lf.patch = P;
    lf.ns = aligned.lattice.i_max - aligned.lattice.i_min + 1;
    lf.nt = aligned.lattice.j_max - aligned.lattice.j_min + 1;
    lf.channels = 3;
    lf.row0_shifted = std::abs(aligned.lattice.j_min) % 2;
    lf.data.assign(static_cast<size_t>(P) * P * lf.ns * lf.nt * lf.channels,
                   0.0f);
    lf.mask.assign(static_cast<size_t>(P) * P * lf.ns * lf.nt, 0);

    const Image<float>* planes[3] = {&aligned.image.r, &aligned.image.g,
                                     &aligned.image.b};
    const int half = (P - 1) / 2;
    const int W = aligned.lattice.width, H = aligned.lattice.height;

    parallel_for(
        0, lf.nt,
        [&](int64_t tt) {
            const int t = static_cast<int>(tt);
            const int j = aligned.lattice.j_min + t;
            for (int s = 0; s < lf.ns; ++s) {
                const int i = aligned.lattice.i_min + s;
                const Vec2 c = lens_position(aligned.lattice, i, j);
                for (int v = 0; v < P; ++v) {
                    const double py = c.y + v - half;
                    for (int u = 0; u < P; ++u) {
                        const double px = c.x + u - half;
                        if (px < 0 || px > W - 1 || py < 0 || py > H - 1)
                            continue;
                        for (int ch = 0; ch < 3; ++ch)
                            lf.at(u, v, s, t, ch) = static_cast<float>(
                                planes[ch]->sample_bilinear(px, py));
                        // patch pixel valid only with full mask support
                        const int x0 = static_cast<int>(px);
                        const int y0 = static_cast<int>(py);
                        bool ok = true;
                        for (int my = y0; my <= std::min(y0 + 1, H - 1) && ok; ++my)
                            for (int mx = x0; mx <= std::min(x0 + 1, W - 1); ++mx)
                                if (!aligned.mask.at(mx, my)) {
                                    ok = false;
                                    break;
                                }
                        lf.mask[(((static_cast<size_t>(u) * P + v) * lf.nt + t) *
                                     lf.ns +
                                 s)] = ok;
                    }
                }
            }
        },
        jobs, 4);
    return lf;
}

LightField hex_to_rect(const LightField& lf, DecodeOptions::Resample mode,
                       int jobs) {
    LightField out;
    out.patch = lf.patch;
    out.ns = 2 * lf.ns;
    out.nt = lf.nt;
    out.channels = lf.channels;
    out.data.assign(static_cast<size_t>(out.patch) * out.patch * out.ns *
                        out.nt * out.channels,
                    0.0f);
    out.mask.assign(static_cast<size_t>(out.patch) * out.patch * out.ns * out.nt,
                    0);

    out.row0_shifted = lf.row0_shifted;
    auto row_shifted = [&](int t) { return (t + lf.row0_shifted) % 2 == 1; };

    parallel_for(
        0, lf.patch * lf.patch,
        [&](int64_t uv) {
            const int u = static_cast<int>(uv) / lf.patch;
            const int v = static_cast<int>(uv) % lf.patch;
            for (int t = 0; t < lf.nt; ++t) {
                const bool shifted = row_shifted(t);
                for (int m = 0; m < out.ns; ++m) {
                    // x = m / 2 lens units; samples exist where the
                    // half-integer part matches the row shift
                    const bool on_sample = (m % 2 == 1) == shifted;
                    if (on_sample) {
                        const int s = shifted ? (m - 1) / 2 : m / 2;
                        for (int ch = 0; ch < lf.channels; ++ch)
                            out.at(u, v, m, t, ch) = lf.at(u, v, s, t, ch);
                        out.mask[(((static_cast<size_t>(u) * out.patch + v) *
                                       out.nt +
                                   t) *
                                      out.ns +
                                  m)] = lf.mask_at(u, v, s, t);
                        continue;
                    }
                    // horizontal neighbors on the same row
                    const int sl = shifted ? m / 2 - 1 : (m - 1) / 2;
                    const int sr = sl + 1;
                    // vertical neighbors on adjacent rows at the same x
                    const int tv_up = t - 1, tv_dn = t + 1;
                    const int sv = shifted ? m / 2 : (m - 1) / 2;

                    for (int ch = 0; ch < lf.channels; ++ch) {
                        const bool has_l = sl >= 0;
                        const bool has_r = sr < lf.ns;
                        const bool has_u = tv_up >= 0;
                        const bool has_d = tv_dn < lf.nt;
                        const float left = has_l ? lf.at(u, v, sl, t, ch) : 0;
                        const float right = has_r ? lf.at(u, v, sr, t, ch) : 0;
                        const float up =
                            has_u && sv < lf.ns ? lf.at(u, v, sv, tv_up, ch) : 0;
                        const float down =
                            has_d && sv < lf.ns ? lf.at(u, v, sv, tv_dn, ch) : 0;

                        float hz = has_l && has_r ? 0.5f * (left + right)
                                   : has_l        ? left
                                                  : right;
                        float vt = has_u && has_d ? 0.5f * (up + down)
                                   : has_u        ? up
                                                  : down;
                        float result;
                        if (mode == DecodeOptions::Resample::bilinear) {
                            result = 0.5f * (hz + vt);
                        } else {
                            const float gx = std::abs(right - left);
                            const float gy = std::abs(down - up);
                            if (gx < 0.5f * gy)
                                result = hz;
                            else if (gy < 0.5f * gx)
                                result = vt;
                            else
                                result = 0.5f * (hz + vt);
                        }
                        out.at(u, v, m, t, ch) = result;
                    }
                    uint8_t ok = 1;
                    if (sl >= 0 && !lf.mask_at(u, v, sl, t)) ok = 0;
                    if (sr < lf.ns && !lf.mask_at(u, v, sr, t)) ok = 0;
                    if (tv_up >= 0 && sv < lf.ns && !lf.mask_at(u, v, sv, tv_up))
                        ok = 0;
                    if (tv_dn < lf.nt && sv < lf.ns && !lf.mask_at(u, v, sv, tv_dn))
                        ok = 0;
                    out.mask[(((static_cast<size_t>(u) * out.patch + v) * out.nt +
                               t) *
                                  out.ns +
                              m)] = ok;
                }
            }
        },
        jobs, 1);
    return out;
}

DecodeResult decode(const Image<float>& raw, const Image<float>& white,
                    BayerPattern pattern, const GridModel& grid,
                    const DecodeOptions& options) {
    const auto devig = devignette(raw, white, options.black_level,
                                  options.white_level);
    RgbImage rgb;
    if (options.demosaic) {
        rgb = demosaic_malvar(devig.image, pattern);
    } else {
        rgb = RgbImage{devig.image, devig.image, devig.image};
    }
    const AlignResult aligned =
        align_to_grid(rgb, devig.mask, grid, options.jobs);
    const int P = options.patch_size > 0 ? options.patch_size
                                         : aligned.lattice.k;
    LightField lf = slice_to_4d(aligned, P, options.jobs);
    lf = hex_to_rect(lf, options.resample, options.jobs);

    DecodeResult out;
    out.lf = std::move(lf);
    out.provenance.grid_json = grid.to_json();
    json opts;
    opts["black_level"] = options.black_level;
    opts["white_level"] = options.white_level;
    opts["patch_size"] = P;
    opts["resample"] =
        options.resample == DecodeOptions::Resample::gradient_guided
            ? "gradient-guided"
            : "bilinear";
    opts["demosaic"] = options.demosaic ? "malvar" : "none";
    out.provenance.options_json = opts.dump(2);
    return out;
}

Subaperture extract_subaperture(const Image<float>& aligned,
                                const Image<uint8_t>& mask,
                                const AlignedLattice& lattice, int u, int v,
                                int patch_size) {
    const int P = patch_size > 0 ? patch_size : lattice.k;
    const int half = (P - 1) / 2;
    const int ns = lattice.i_max - lattice.i_min + 1;
    const int nt = lattice.j_max - lattice.j_min + 1;
    Subaperture sub{Image<float>(ns, nt, 0.0f), Image<uint8_t>(ns, nt, 0)};
    for (int t = 0; t < nt; ++t) {
        const int j = lattice.j_min + t;
        for (int s = 0; s < ns; ++s) {
            const int i = lattice.i_min + s;
            const Vec2 c = lens_position(lattice, i, j);
            const double px = c.x + u - half;
            const double py = c.y + v - half;
            if (px < 0 || px > aligned.width() - 1 || py < 0 ||
                py > aligned.height() - 1)
                continue;
            sub.values.at(s, t) =
                static_cast<float>(aligned.sample_bilinear(px, py));
            const int x0 = static_cast<int>(px), y0 = static_cast<int>(py);
            bool ok = true;
            for (int my = y0; my <= std::min(y0 + 1, aligned.height() - 1) && ok;
                 ++my)
                for (int mx = x0; mx <= std::min(x0 + 1, aligned.width() - 1);
                     ++mx)
                    if (!mask.at(mx, my)) {
                        ok = false;
                        break;
                    }
            sub.valid.at(s, t) = ok;
        }
    }
    return sub;
}

double ghosting_metric(const Image<float>& aligned, const Image<uint8_t>& mask,
                       const AlignedLattice& lattice, int patch_size,
                       int edge_offset) {
    const int P = patch_size > 0 ? patch_size : lattice.k;
    const int half = (P - 1) / 2;
    if (edge_offset <= 0) edge_offset = half - 1;
    const Subaperture center =
        extract_subaperture(aligned, mask, lattice, half, half, P);
    const Subaperture edge = extract_subaperture(
        aligned, mask, lattice, half - edge_offset, half, P);
    double acc = 0.0;
    int64_t n = 0;
    for (int t = 0; t < center.values.height(); ++t)
        for (int s = 0; s < center.values.width(); ++s) {
            if (!center.valid.at(s, t) || !edge.valid.at(s, t)) continue;
            acc += std::abs(center.values.at(s, t) - edge.values.at(s, t));
            ++n;
        }
    if (n == 0) throw DecodeError("ghosting_metric: no valid lenses");
    return acc / n;
}

void save_light_field(const LightField& lf, const std::string& dir,
                      const DecodeProvenance& provenance) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (int u = 0; u < lf.patch; ++u) {
        for (int v = 0; v < lf.patch; ++v) {
            std::array<Image<uint16_t>, 3> planes{
                Image<uint16_t>(lf.ns, lf.nt), Image<uint16_t>(lf.ns, lf.nt),
                Image<uint16_t>(lf.ns, lf.nt)};
            for (int t = 0; t < lf.nt; ++t)
                for (int s = 0; s < lf.ns; ++s)
                    for (int ch = 0; ch < 3; ++ch) {
                        const double val = std::clamp(
                            static_cast<double>(lf.at(
                                u, v, s, t, std::min(ch, lf.channels - 1))),
                            0.0, 1.0);
                        planes[ch].at(s, t) = static_cast<uint16_t>(
                            std::lround(val * 65535.0));
                    }
            char name[64];
            std::snprintf(name, sizeof(name), "u%02d_v%02d.png", u, v);
            save_png16_rgb((fs::path(dir) / name).string(), planes[0],
                           planes[1], planes[2]);
        }
    }
    // combined validity mask (all subapertures)
    Image<uint8_t> m(lf.ns, lf.nt, 255);
    for (int u = 0; u < lf.patch; ++u)
        for (int v = 0; v < lf.patch; ++v)
            for (int t = 0; t < lf.nt; ++t)
                for (int s = 0; s < lf.ns; ++s)
                    if (!lf.mask_at(u, v, s, t)) m.at(s, t) = 0;
    save_png8((fs::path(dir) / "mask.png").string(), m);

    json manifest;
    manifest["dims"] = {lf.patch, lf.patch, lf.ns, lf.nt, lf.channels};
    manifest["grid"] = json::parse(provenance.grid_json);
    manifest["options"] = json::parse(provenance.options_json);
    manifest["mask_file"] = "mask.png";
    std::ofstream out(fs::path(dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

}  // namespace mlaforge
