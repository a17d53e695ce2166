#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "advx/dataio.hpp"
#include "advx/error.hpp"

namespace advx {

namespace {

struct Gray8 {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<unsigned char> pixels;
};

Gray8 to_gray8(const Tensor& image) {
    const auto& s = image.shape();
    Gray8 g;
    if (s.size() == 2) {
        g.height = s[0];
        g.width = s[1];
    } else if (s.size() == 3 && s[0] == 1) {
        g.height = s[1];
        g.width = s[2];
    } else {
        throw InvalidArgument("cannot export tensor of shape " + shape_string(s) + " as a grayscale image");
    }
    g.pixels.reserve(image.size());
    for (double v : image.values()) {
        if (v < 0.0 || v > 255.0)
            throw InvalidArgument("pixel value " + std::to_string(v) + " outside [0, 255]; clamp before export");
        g.pixels.push_back(static_cast<unsigned char>(std::lround(v)));
    }
    return g;
}

Tensor from_gray8(std::size_t h, std::size_t w, const unsigned char* data) {
    std::vector<double> v(data, data + h * w);
    return Tensor({1, h, w}, std::move(v));
}

void put_be32(std::string& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_be32(std::string_view b, std::size_t at) {
    return (std::uint32_t(static_cast<unsigned char>(b[at])) << 24) |
           (std::uint32_t(static_cast<unsigned char>(b[at + 1])) << 16) |
           (std::uint32_t(static_cast<unsigned char>(b[at + 2])) << 8) |
           std::uint32_t(static_cast<unsigned char>(b[at + 3]));
}

void put_chunk(std::string& out, const char type[4], std::string_view data) {
    put_be32(out, static_cast<std::uint32_t>(data.size()));
    std::string body(type, 4);
    body.append(data);
    out += body;
    put_be32(out, static_cast<std::uint32_t>(
                      crc32(0, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size()))));
}

constexpr char kPngSignature[8] = {'\x89', 'P', 'N', 'G', '\r', '\n', '\x1a', '\n'};

unsigned char paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return static_cast<unsigned char>(a);
    if (pb <= pc) return static_cast<unsigned char>(b);
    return static_cast<unsigned char>(c);
}

}  // namespace

ImageFormat image_format_for(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") return ImageFormat::PNG;
    if (ext == ".pgm") return ImageFormat::PGM;
    throw InvalidArgument("cannot infer image format from '" + path.string() + "' (use .pgm or .png)");
}

std::string encode_pgm(const Tensor& image) {
    const auto g = to_gray8(image);
    std::string out = "P5\n" + std::to_string(g.width) + " " + std::to_string(g.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(g.pixels.data()), g.pixels.size());
    return out;
}

std::string encode_png(const Tensor& image) {
    const auto g = to_gray8(image);
    std::string raw;
    raw.reserve(g.height * (g.width + 1));
    for (std::size_t y = 0; y < g.height; ++y) {
        raw.push_back('\0');  // filter: none
        raw.append(reinterpret_cast<const char*>(g.pixels.data() + y * g.width), g.width);
    }
    uLongf zlen = compressBound(static_cast<uLong>(raw.size()));
    std::string z(zlen, '\0');
    if (compress2(reinterpret_cast<Bytef*>(z.data()), &zlen, reinterpret_cast<const Bytef*>(raw.data()),
                  static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw IoError("zlib compression failed");
    z.resize(zlen);

    std::string out(kPngSignature, sizeof kPngSignature);
    std::string ihdr;
    put_be32(ihdr, static_cast<std::uint32_t>(g.width));
    put_be32(ihdr, static_cast<std::uint32_t>(g.height));
    ihdr += std::string("\x08\x00\x00\x00\x00", 5);  // 8-bit, grayscale, deflate, adaptive filter, no interlace
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", z);
    put_chunk(out, "IEND", {});
    return out;
}

void export_image(const Tensor& image, const std::filesystem::path& path, ImageFormat format) {
    write_file(path, format == ImageFormat::PGM ? encode_pgm(image) : encode_png(image));
}

Tensor decode_pgm(std::string_view bytes) {
    // Header: "P5" whitespace width whitespace height whitespace maxval, one
    // whitespace byte, then raw pixels. '#' starts a comment running to the end of line.
    std::size_t pos = 0;
    auto skip_ws = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto number = [&]() -> std::size_t {
        skip_ws();
        std::size_t v = 0, digits = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
            ++digits;
        }
        if (!digits) throw FormatError("PGM: malformed header");
        return v;
    };
    if (bytes.substr(0, 2) != "P5") throw FormatError("PGM: not a binary P5 file");
    pos = 2;
    const auto w = number(), h = number(), maxval = number();
    if (maxval != 255) throw FormatError("PGM: only maxval 255 is supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw FormatError("PGM: malformed header");
    ++pos;
    if (bytes.size() - pos != w * h) throw FormatError("PGM: payload size does not match dimensions");
    return from_gray8(h, w, reinterpret_cast<const unsigned char*>(bytes.data() + pos));
}

Tensor decode_png(std::string_view bytes) {
    if (bytes.size() < 8 || bytes.substr(0, 8) != std::string_view(kPngSignature, 8))
        throw FormatError("PNG: bad signature");
    std::size_t pos = 8, width = 0, height = 0;
    std::string idat;
    bool seen_header = false, seen_end = false;
    while (!seen_end) {
        if (bytes.size() - pos < 12) throw FormatError("PNG: truncated chunk");
        const std::size_t len = get_be32(bytes, pos);
        if (bytes.size() - pos - 12 < len) throw FormatError("PNG: truncated chunk");
        auto type = bytes.substr(pos + 4, 4);
        auto data = bytes.substr(pos + 8, len);
        const auto crc = get_be32(bytes, pos + 8 + len);
        if (crc != crc32(0, reinterpret_cast<const Bytef*>(bytes.data() + pos + 4), static_cast<uInt>(len + 4)))
            throw FormatError("PNG: CRC mismatch in " + std::string(type) + " chunk");
        if (type == "IHDR") {
            if (len != 13) throw FormatError("PNG: bad IHDR");
            width = get_be32(data, 0);
            height = get_be32(data, 4);
            if (data[8] != 8 || data[9] != 0 || data[12] != 0)
                throw FormatError("PNG: only 8-bit non-interlaced grayscale is supported");
            seen_header = true;
        } else if (type == "IDAT") {
            idat.append(data);
        } else if (type == "IEND") {
            seen_end = true;
        }
        pos += 12 + len;
    }
    if (!seen_header) throw FormatError("PNG: missing IHDR");

    const std::size_t stride = width + 1;
    std::string raw(height * stride, '\0');
    uLongf rawlen = static_cast<uLongf>(raw.size());
    if (uncompress(reinterpret_cast<Bytef*>(raw.data()), &rawlen, reinterpret_cast<const Bytef*>(idat.data()),
                   static_cast<uLong>(idat.size())) != Z_OK ||
        rawlen != raw.size())
        throw FormatError("PNG: corrupt image data");

    std::vector<unsigned char> px(width * height);
    for (std::size_t y = 0; y < height; ++y) {
        const auto filter = static_cast<unsigned char>(raw[y * stride]);
        const auto* src = reinterpret_cast<const unsigned char*>(raw.data() + y * stride + 1);
        unsigned char* row = px.data() + y * width;
        const unsigned char* up = y ? row - width : nullptr;
        for (std::size_t x = 0; x < width; ++x) {
            const int a = x ? row[x - 1] : 0, b = up ? up[x] : 0, c = (x && up) ? up[x - 1] : 0;
            int pred = 0;
            switch (filter) {
                case 0: pred = 0; break;
                case 1: pred = a; break;
                case 2: pred = b; break;
                case 3: pred = (a + b) / 2; break;
                case 4: pred = paeth(a, b, c); break;
                default: throw FormatError("PNG: unknown filter type " + std::to_string(filter));
            }
            row[x] = static_cast<unsigned char>(src[x] + pred);
        }
    }
    return from_gray8(height, width, px.data());
}

Tensor import_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return image_format_for(path) == ImageFormat::PNG ? decode_png(bytes) : decode_pgm(bytes);
}

Tensor side_by_side(std::span<const Tensor> images, std::size_t gap) {
    if (images.empty()) throw InvalidArgument("side_by_side: no images");
    std::size_t h = 0, total_w = 0;
    std::vector<Gray8> parts;
    for (const auto& img : images) {
        parts.push_back(to_gray8(img));
        h = std::max(h, parts.back().height);
        total_w += parts.back().width;
    }
    total_w += gap * (parts.size() - 1);
    std::vector<double> out(h * total_w, 0.0);
    std::size_t x0 = 0;
    for (const auto& p : parts) {
        for (std::size_t y = 0; y < p.height; ++y)
            for (std::size_t x = 0; x < p.width; ++x) out[y * total_w + x0 + x] = p.pixels[y * p.width + x];
        x0 += p.width + gap;
    }
    return Tensor({1, h, total_w}, std::move(out));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace advx
