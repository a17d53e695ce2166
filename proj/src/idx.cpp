#include <zlib.h>

#include <memory>

#include "advx/dataio.hpp"
#include "advx/error.hpp"

namespace advx {

namespace {

// gzread passes uncompressed files through unchanged.
std::string slurp_maybe_gzip(const std::filesystem::path& path) {
    std::unique_ptr<gzFile_s, decltype(&gzclose)> f(gzopen(path.string().c_str(), "rb"), &gzclose);
    if (!f) throw IoError("cannot open '" + path.string() + "'");
    std::string out;
    char buf[1 << 16];
    int n;
    while ((n = gzread(f.get(), buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
    if (n < 0) throw FormatError("'" + path.string() + "': corrupt gzip stream");
    return out;
}

std::uint32_t be32(std::string_view bytes, std::size_t at) {
    return (std::uint32_t(static_cast<unsigned char>(bytes[at])) << 24) |
           (std::uint32_t(static_cast<unsigned char>(bytes[at + 1])) << 16) |
           (std::uint32_t(static_cast<unsigned char>(bytes[at + 2])) << 8) |
           std::uint32_t(static_cast<unsigned char>(bytes[at + 3]));
}

struct Idx {
    std::vector<std::uint32_t> dims;
    std::string_view payload;
};

Idx parse_idx(std::string_view bytes, std::uint32_t expected_magic, const std::string& what) {
    if (bytes.size() < 4) throw FormatError(what + ": file too short for an IDX header");
    const auto magic = be32(bytes, 0);
    if (magic != expected_magic) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "bad magic 0x%08x (expected 0x%08x)", magic, expected_magic);
        throw FormatError(what + ": " + buf);
    }
    const std::size_t ndims = magic & 0xff;
    if (bytes.size() < 4 + 4 * ndims) throw FormatError(what + ": truncated IDX dimension header");
    Idx idx;
    std::size_t count = 1;
    for (std::size_t i = 0; i < ndims; ++i) {
        idx.dims.push_back(be32(bytes, 4 + 4 * i));
        count *= idx.dims.back();
    }
    idx.payload = bytes.substr(4 + 4 * ndims);
    if (idx.payload.size() < count)
        throw FormatError(what + ": truncated payload, " + std::to_string(idx.payload.size()) + " of " +
                          std::to_string(count) + " bytes present");
    if (idx.payload.size() > count)
        throw FormatError(what + ": " + std::to_string(idx.payload.size() - count) + " trailing bytes");
    return idx;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t classes) {
    const std::string image_bytes = slurp_maybe_gzip(images_path);
    const std::string label_bytes = slurp_maybe_gzip(labels_path);
    const auto images = parse_idx(image_bytes, 0x00000803, images_path.filename().string());
    const auto labels = parse_idx(label_bytes, 0x00000801, labels_path.filename().string());
    if (images.dims[0] != labels.dims[0])
        throw FormatError("image/label count mismatch: " + std::to_string(images.dims[0]) + " images, " +
                          std::to_string(labels.dims[0]) + " labels");

    Dataset ds;
    ds.name = images_path.filename().string();
    ds.split = ds.name.find("train") != std::string::npos ? "train" : "test";
    ds.classes = classes;
    const std::size_t rows = images.dims[1], cols = images.dims[2], px = rows * cols;
    ds.examples.reserve(images.dims[0]);
    for (std::size_t i = 0; i < images.dims[0]; ++i) {
        const std::size_t label = static_cast<unsigned char>(labels.payload[i]);
        if (label >= classes)
            throw FormatError("label " + std::to_string(label) + " at index " + std::to_string(i) +
                              " exceeds class count " + std::to_string(classes));
        std::vector<double> pixels(px);
        for (std::size_t p = 0; p < px; ++p) pixels[p] = static_cast<unsigned char>(images.payload[i * px + p]);
        ds.examples.push_back({Tensor({1, rows, cols}, std::move(pixels)), label});
    }
    return ds;
}

}  // namespace advx
