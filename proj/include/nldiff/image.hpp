#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"

namespace nldiff {

/// Grayscale image with values in [0, 1], stored row by row from the top.
struct ImageField {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<double> values;

    double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
    bool operator==(const ImageField&) const = default;
};

namespace detail {

// Next whitespace-delimited header token, skipping '#' comments.
inline std::string pgm_token(const std::string& data, std::size_t& pos) {
    for (;;) {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        if (pos < data.size() && data[pos] == '#') {
            while (pos < data.size() && data[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    std::string tok;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#')
        tok += data[pos++];
    return tok;
}

inline std::size_t pgm_number(const std::string& data, std::size_t& pos, const char* what) {
    const std::string tok = pgm_token(data, pos);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        throw FormatError(std::string("pgm: bad ") + what + " '" + tok + "'");
    if (tok.size() > 9) throw FormatError(std::string("pgm: ") + what + " too large");
    return static_cast<std::size_t>(std::stoul(tok));
}

}  // namespace detail

/// Reads P2 (ASCII) or P5 (binary, 8- or 16-bit big-endian) and scales by
/// maxval.
inline ImageField read_pgm(std::istream& is) {
    const std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    const std::string magic = detail::pgm_token(data, pos);
    if (magic != "P2" && magic != "P5") throw FormatError("pgm: unsupported magic '" + magic + "'");
    ImageField img;
    img.width = detail::pgm_number(data, pos, "width");
    img.height = detail::pgm_number(data, pos, "height");
    const std::size_t maxval = detail::pgm_number(data, pos, "maxval");
    if (img.width == 0 || img.height == 0) throw FormatError("pgm: empty image");
    if (maxval == 0 || maxval > 65535) throw FormatError("pgm: maxval must be in 1..65535");
    const std::size_t n = img.width * img.height;
    img.values.reserve(n);
    if (magic == "P2") {
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t v = detail::pgm_number(data, pos, "pixel");
            if (v > maxval) throw FormatError("pgm: pixel exceeds maxval");
            img.values.push_back(static_cast<double>(v) / static_cast<double>(maxval));
        }
        return img;
    }
    // Exactly one whitespace byte separates the header from the raster.
    if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
        throw FormatError("pgm: missing raster");
    ++pos;
    const std::size_t bytes = maxval < 256 ? 1 : 2;
    if (data.size() - pos < n * bytes) throw FormatError("pgm: truncated raster");
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t v = static_cast<unsigned char>(data[pos + k * bytes]);
        if (bytes == 2) v = (v << 8) | static_cast<unsigned char>(data[pos + k * bytes + 1]);
        if (v > maxval) throw FormatError("pgm: pixel exceeds maxval");
        img.values.push_back(static_cast<double>(v) / static_cast<double>(maxval));
    }
    return img;
}

inline ImageField load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("pgm: cannot open '" + path + "'");
    return read_pgm(in);
}

inline std::uint8_t quantize_gray(double v) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

/// Binary 8-bit P5 with the header "P5\n<w> <h>\n255\n".
inline void write_pgm(std::ostream& os, const ImageField& img) {
    os << "P5\n" << img.width << ' ' << img.height << "\n255\n";
    std::string raster(img.values.size(), '\0');
    for (std::size_t k = 0; k < img.values.size(); ++k) raster[k] = static_cast<char>(quantize_gray(img.values[k]));
    os.write(raster.data(), static_cast<std::streamsize>(raster.size()));
}

inline void save_pgm(const ImageField& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("pgm: cannot write '" + path + "'");
    write_pgm(out, img);
}

// Omega = (0,1) x (0, height/width); axis 0 runs along columns, axis 1 along
// rows, so pixel (row, col) is node (col, row).
inline Grid image_grid(std::size_t width, std::size_t height) {
    return build_grid(2, {{0.0, 1.0}, {0.0, static_cast<double>(height) / static_cast<double>(width)}},
                      {width, height});
}

inline Field image_to_field(const ImageField& img) {
    const Grid g = image_grid(img.width, img.height);
    std::vector<double> v(g.size());
    for (std::size_t row = 0; row < img.height; ++row)
        for (std::size_t col = 0; col < img.width; ++col) v[g.flat_index(col, row)] = img.at(row, col);
    return Field(g, std::move(v));
}

inline ImageField field_to_image(const Field& f) {
    const Grid& g = f.grid();
    if (g.dim() != 2) throw ContractViolation("field_to_image needs a 2D field");
    ImageField img;
    img.width = g.counts()[0];
    img.height = g.counts()[1];
    img.values.resize(g.size());
    for (std::size_t row = 0; row < img.height; ++row)
        for (std::size_t col = 0; col < img.width; ++col) img.values[row * img.width + col] = f[g.flat_index(col, row)];
    return img;
}

}  // namespace nldiff
