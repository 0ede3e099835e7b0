#include "clipsam/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace clipsam {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& is, const std::filesystem::path& path) {
    std::string tok;
    char c;
    while (is.get(c)) {
        if (c == '#') {
            std::string discard;
            std::getline(is, discard);
            if (!tok.empty()) break;
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!tok.empty()) break;
            continue;
        }
        tok.push_back(c);
    }
    if (tok.empty()) throw ImageError(path.string() + ": truncated header");
    return tok;
}

std::size_t header_number(std::istream& is, const std::filesystem::path& path, const char* what) {
    const std::string tok = header_token(is, path);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != tok.size()) throw ImageError(path.string() + ": invalid " + what + " \"" + tok + "\"");
    return static_cast<std::size_t>(v);
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ImageError("cannot open " + path.string() + " for writing");
    return os;
}

void finish(std::ofstream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw ImageError("failed writing " + path.string());
}

}  // namespace

Tensor load_image(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ImageError("cannot open " + path.string());
    if (header_token(is, path) != "P5") throw ImageError(path.string() + ": not a binary PGM (P5) file");
    const std::size_t w = header_number(is, path, "width");
    const std::size_t h = header_number(is, path, "height");
    const std::size_t maxval = header_number(is, path, "maxval");
    if (w == 0 || h == 0) throw ImageError(path.string() + ": zero image extent");
    if (maxval == 0 || maxval > 255) throw ImageError(path.string() + ": only 8-bit PGM is supported");

    std::vector<unsigned char> bytes(w * h);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(is.gcount()) != bytes.size()) throw ImageError(path.string() + ": truncated pixel data");

    Tensor img({h, w});
    const double scale = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        if (bytes[i] > maxval) throw ImageError(path.string() + ": pixel exceeds maxval");
        img[i] = static_cast<double>(bytes[i]) * scale;
    }
    return img;
}

void save_image(const std::filesystem::path& path, const Tensor& image) {
    if (image.rank() != 2 || image.numel() == 0) throw ShapeError("save_image expects a non-empty H×W map");
    std::vector<unsigned char> bytes(image.numel());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const double v = image[i];
        if (!(v >= 0.0 && v <= 1.0)) throw ImageError("pixel value outside [0, 1] for " + path.string());
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    std::ofstream os = open_for_write(path);
    os << "P5\n" << image.dim(1) << ' ' << image.dim(0) << "\n255\n";
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    finish(os, path);
}

BinaryMask load_mask(const std::filesystem::path& path) {
    const Tensor t = load_image(path);
    BinaryMask m(t.dim(0), t.dim(1));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        if (t[i] != 0.0 && t[i] != 1.0) throw ImageError(path.string() + ": mask pixels must be 0 or 255");
        m.set(i / t.dim(1), i % t.dim(1), t[i] == 1.0);
    }
    return m;
}

void save_mask(const std::filesystem::path& path, const BinaryMask& mask) { save_image(path, mask.to_tensor()); }

void save_color_image(const std::filesystem::path& path, const ColorImage& image) {
    if (image.pixels.size() != image.height * image.width || image.pixels.empty()) {
        throw ShapeError("color image size does not match its extents");
    }
    std::ofstream os = open_for_write(path);
    os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.pixels.data()), static_cast<std::streamsize>(image.pixels.size() * 3));
    finish(os, path);
}

ColorImage heat_overlay(const Tensor& image, const Tensor& heat) {
    if (image.rank() != 2 || image.shape() != heat.shape()) {
        throw ShapeError("overlay needs matching H×W maps, got " + shape_str(image.shape()) + " and " +
                         shape_str(heat.shape()));
    }
    ColorImage out{image.dim(0), image.dim(1), std::vector<Rgb>(image.numel())};
    auto byte = [](double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    for (std::size_t i = 0; i < image.numel(); ++i) {
        const double a = 0.6 * std::clamp(heat[i], 0.0, 1.0);
        const double g = image[i];
        out.pixels[i] = {byte((1 - a) * g + a), byte((1 - a) * g), byte((1 - a) * g)};
    }
    return out;
}

}  // namespace clipsam
