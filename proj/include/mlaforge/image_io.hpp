#pragma once

#include <string>

#include "mlaforge/image.hpp"

namespace mlaforge {

// 16-bit binary PGM (P5, big-endian sample order per the netpbm spec).
void save_pgm16(const std::string& path, const Image<uint16_t>& img,
                int maxval = 65535);
Image<uint16_t> load_pgm16(const std::string& path, int* maxval = nullptr);

// 16-bit single-channel PNG.
void save_png16(const std::string& path, const Image<uint16_t>& img);
Image<uint16_t> load_png16(const std::string& path);

// 16-bit RGB PNG from three planes of equal size.
void save_png16_rgb(const std::string& path, const Image<uint16_t>& r,
                    const Image<uint16_t>& g, const Image<uint16_t>& b);

// 8-bit single-channel PNG (masks).
void save_png8(const std::string& path, const Image<uint8_t>& img);

}  // namespace mlaforge
