#include "mlaforge/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>

namespace mlaforge {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void io_fail(const std::string& what, const std::string& path) {
    throw std::runtime_error(what + ": " + path);
}

}  // namespace

const char* bayer_pattern_name(BayerPattern p) {
    switch (p) {
        case BayerPattern::RGGB: return "RGGB";
        case BayerPattern::GRBG: return "GRBG";
        case BayerPattern::GBRG: return "GBRG";
        case BayerPattern::BGGR: return "BGGR";
    }
    return "GRBG";
}

BayerPattern bayer_pattern_from_name(const std::string& name) {
    if (name == "RGGB") return BayerPattern::RGGB;
    if (name == "GRBG") return BayerPattern::GRBG;
    if (name == "GBRG") return BayerPattern::GBRG;
    if (name == "BGGR") return BayerPattern::BGGR;
    throw std::invalid_argument("unknown Bayer pattern: " + name);
}

void save_pgm16(const std::string& path, const Image<uint16_t>& img, int maxval) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) io_fail("cannot open for writing", path);
    std::fprintf(f.get(), "P5\n%d %d\n%d\n", img.width(), img.height(), maxval);
    std::vector<uint8_t> row(static_cast<size_t>(img.width()) * 2);
    for (int y = 0; y < img.height(); ++y) {
        const uint16_t* src = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            row[2 * x] = static_cast<uint8_t>(src[x] >> 8);
            row[2 * x + 1] = static_cast<uint8_t>(src[x] & 0xff);
        }
        if (std::fwrite(row.data(), 1, row.size(), f.get()) != row.size())
            io_fail("short write", path);
    }
}

Image<uint16_t> load_pgm16(const std::string& path, int* maxval_out) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) io_fail("cannot open", path);

    auto next_token = [&]() -> long {
        int c;
        // skip whitespace and comments
        while ((c = std::fgetc(f.get())) != EOF) {
            if (c == '#') {
                while ((c = std::fgetc(f.get())) != EOF && c != '\n') {}
            } else if (!std::isspace(c)) {
                break;
            }
        }
        if (c == EOF) io_fail("truncated header", path);
        long v = 0;
        do {
            if (!std::isdigit(c)) io_fail("bad header token", path);
            v = v * 10 + (c - '0');
            c = std::fgetc(f.get());
        } while (c != EOF && !std::isspace(c));
        return v;
    };

    char magic[3] = {0, 0, 0};
    if (std::fread(magic, 1, 2, f.get()) != 2 || magic[0] != 'P' || magic[1] != '5')
        io_fail("not a P5 PGM", path);
    const long w = next_token();
    const long h = next_token();
    const long maxval = next_token();
    if (w <= 0 || h <= 0 || maxval <= 255 || maxval > 65535)
        io_fail("unsupported PGM geometry (need 16-bit P5)", path);
    if (maxval_out) *maxval_out = static_cast<int>(maxval);

    Image<uint16_t> img(static_cast<int>(w), static_cast<int>(h));
    std::vector<uint8_t> row(static_cast<size_t>(w) * 2);
    for (long y = 0; y < h; ++y) {
        if (std::fread(row.data(), 1, row.size(), f.get()) != row.size())
            io_fail("truncated pixel data", path);
        uint16_t* dst = img.row(static_cast<int>(y));
        for (long x = 0; x < w; ++x)
            dst[x] = static_cast<uint16_t>((row[2 * x] << 8) | row[2 * x + 1]);
    }
    return img;
}

namespace {

void write_png(const std::string& path, int width, int height, int bit_depth,
               const std::vector<png_bytep>& rows, int color_type);

void write_png(const std::string& path, int width, int height, int bit_depth,
               const std::vector<png_bytep>& rows) {
    write_png(path, width, height, bit_depth, rows, PNG_COLOR_TYPE_GRAY);
}

void write_png(const std::string& path, int width, int height, int bit_depth,
               const std::vector<png_bytep>& rows, int color_type) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) io_fail("cannot open for writing", path);
    png_structp png =
        png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) io_fail("png_create_write_struct failed", path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        io_fail("png_create_info_struct failed", path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        io_fail("libpng error while writing", path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);  // little-endian in-memory rows
    png_write_image(png, const_cast<png_bytep*>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_png16(const std::string& path, const Image<uint16_t>& img) {
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<uint16_t*>(img.row(y)));
    write_png(path, img.width(), img.height(), 16, rows);
}

void save_png8(const std::string& path, const Image<uint8_t>& img) {
    std::vector<png_bytep> rows(img.height());
    for (int y = 0; y < img.height(); ++y)
        rows[y] = const_cast<png_bytep>(img.row(y));
    write_png(path, img.width(), img.height(), 8, rows);
}

void save_png16_rgb(const std::string& path, const Image<uint16_t>& r,
                    const Image<uint16_t>& g, const Image<uint16_t>& b) {
    const int w = r.width(), h = r.height();
    if (g.width() != w || g.height() != h || b.width() != w || b.height() != h)
        io_fail("RGB plane size mismatch", path);
    std::vector<uint16_t> interleaved(static_cast<size_t>(w) * h * 3);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) {
        uint16_t* dst = interleaved.data() + static_cast<size_t>(y) * w * 3;
        for (int x = 0; x < w; ++x) {
            dst[3 * x] = r.at(x, y);
            dst[3 * x + 1] = g.at(x, y);
            dst[3 * x + 2] = b.at(x, y);
        }
        rows[y] = reinterpret_cast<png_bytep>(dst);
    }
    write_png(path, w, h, 16, rows, PNG_COLOR_TYPE_RGB);
}

Image<uint16_t> load_png16(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) io_fail("cannot open", path);
    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) io_fail("png_create_read_struct failed", path);
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        io_fail("png_create_info_struct failed", path);
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail("libpng error while reading", path);
    }
    png_init_io(png, f.get());
    png_read_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail("expected grayscale PNG", path);
    }
    if (depth < 16) png_set_expand_16(png);
    png_set_swap(png);
    png_read_update_info(png, info);

    Image<uint16_t> img(w, h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = reinterpret_cast<png_bytep>(img.row(y));
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace mlaforge
