#include "mammo/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "mammo/errors.hpp"

namespace mammo {

namespace {

std::string lowerExtension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnmToken(std::istream& in) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    return tok;
}

GrayImage readPgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::string magic = pnmToken(in);
    if (magic != "P5" && magic != "P2") throw DataError(path.string() + ": not a grayscale PGM");
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(pnmToken(in));
        h = std::stoi(pnmToken(in));
        maxval = std::stoi(pnmToken(in));
    } catch (const std::exception&) {
        throw DataError(path.string() + ": malformed PGM header");
    }
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw DataError(path.string() + ": invalid PGM header");
    GrayImage img(w, h);
    const double scale = 1.0 / maxval;
    if (magic == "P2") {
        for (double& v : img.pixels) {
            int raw;
            if (!(in >> raw)) throw DataError(path.string() + ": truncated PGM data");
            v = std::clamp(raw * scale, 0.0, 1.0);
        }
        return img;
    }
    const int bytesPerSample = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> buf(img.size() * bytesPerSample);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw DataError(path.string() + ": truncated PGM data");
    for (std::size_t i = 0; i < img.size(); ++i) {
        const unsigned raw = bytesPerSample == 2 ? (buf[2 * i] << 8) | buf[2 * i + 1] : buf[i];
        img.pixels[i] = std::clamp(raw * scale, 0.0, 1.0);
    }
    return img;
}

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

GrayImage readPng(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "rb"));
    if (!file) throw IoError("cannot open " + path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialisation failed");
    }
    GrayImage img;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError(path.string() + ": unreadable PNG");
    }
    png_init_io(png, file.get());
    png_read_info(png, info);
    const auto colorType = png_get_color_type(png, info);
    if (colorType & PNG_COLOR_MASK_PALETTE) png_set_palette_to_rgb(png);
    if (colorType & PNG_COLOR_MASK_COLOR || colorType & PNG_COLOR_MASK_PALETTE) {
        png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int depth = png_get_bit_depth(png, info);
    const std::size_t rowBytes = png_get_rowbytes(png, info);
    std::vector<unsigned char> rows(rowBytes * static_cast<std::size_t>(h));
    std::vector<png_bytep> ptrs(static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) ptrs[y] = rows.data() + rowBytes * y;
    png_read_image(png, ptrs.data());
    png_destroy_read_struct(&png, &info, nullptr);

    img = GrayImage(w, h);
    const double scale = depth == 16 ? 1.0 / 65535.0 : 1.0 / 255.0;
    for (int y = 0; y < h; ++y) {
        const unsigned char* r = ptrs[y];
        for (int x = 0; x < w; ++x) {
            const unsigned raw = depth == 16 ? (r[2 * x] << 8) | r[2 * x + 1] : r[x];
            img.at(x, y) = raw * scale;
        }
    }
    return img;
}

}  // namespace

GrayImage readImage(const std::filesystem::path& path) {
    const std::string ext = lowerExtension(path);
    if (ext == ".pgm" || ext == ".pnm") return readPgm(path);
    if (ext == ".png") return readPng(path);
    throw DataError(path.string() + ": unsupported image format (expected .pgm or .png)");
}

void writePgm16(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
    std::vector<unsigned char> buf(img.size() * 2);
    for (std::size_t i = 0; i < img.size(); ++i) {
        const auto raw = static_cast<unsigned>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 65535.0));
        buf[2 * i] = static_cast<unsigned char>(raw >> 8);
        buf[2 * i + 1] = static_cast<unsigned char>(raw & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

void writePng8(const GrayImage& img, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.string().c_str(), "wb"));
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<unsigned char> rows(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        rows[i] = static_cast<unsigned char>(std::lround(std::clamp(img.pixels[i], 0.0, 1.0) * 255.0));
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing " + path.string());
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y) png_write_row(png, rows.data() + static_cast<std::size_t>(y) * img.width);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace mammo
