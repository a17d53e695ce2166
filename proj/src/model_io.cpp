#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "advx/digest.hpp"
#include "advx/error.hpp"
#include "advx/model.hpp"

// File layout (all integers little-endian):
//   8 bytes   magic "ADVXNET\0"
//   u32       format version
//   u64       header length, then that many bytes of JSON (spec + training record)
//   u32       parameter tensor count
//   per tensor: u32 rank, rank x u64 dims, u64 element count, count x f64
namespace advx {

namespace {

constexpr char kMagic[8] = {'A', 'D', 'V', 'X', 'N', 'E', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    std::string_view take(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n)
            throw FormatError(std::string("model file truncated while reading ") + what);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::uint64_t uint(std::size_t width, const char* what) {
        auto s = take(width, what);
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < width; ++i) v |= std::uint64_t(static_cast<unsigned char>(s[i])) << (8 * i);
        return v;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

nlohmann::json header_json(const TrainedModel& model, bool with_record) {
    const auto& spec = model.spec();
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : spec.layers) layers.push_back(to_string(l));
    nlohmann::json j = {
        {"input_shape", spec.input_shape},
        {"classes", spec.classes},
        {"input_scale", spec.input_scale},
        {"layers", layers},
    };
    if (with_record) {
        const auto& r = model.record();
        j["training"] = {{"seed", r.seed}, {"epochs", r.epochs}, {"train_accuracy", r.train_accuracy}};
        if (r.test_accuracy) j["training"]["test_accuracy"] = *r.test_accuracy;
    }
    return j;
}

std::string serialize(const TrainedModel& model, bool with_record) {
    std::string out(kMagic, sizeof kMagic);
    put_u32(out, kVersion);
    const std::string header = header_json(model, with_record).dump();
    put_u64(out, header.size());
    out += header;
    put_u32(out, static_cast<std::uint32_t>(model.parameters().size()));
    for (const auto& t : model.parameters()) {
        put_u32(out, static_cast<std::uint32_t>(t.shape().size()));
        for (auto d : t.shape()) put_u64(out, d);
        put_u64(out, t.size());
        for (double v : t.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    }
    return out;
}

}  // namespace

std::string serialize_model(const TrainedModel& model) { return serialize(model, true); }

TrainedModel deserialize_model(std::string_view bytes) {
    Reader in(bytes);
    if (in.take(sizeof kMagic, "magic") != std::string_view(kMagic, sizeof kMagic))
        throw FormatError("not a model file (bad magic)");
    const auto version = in.uint(4, "version");
    if (version != kVersion)
        throw FormatError("unsupported model format version " + std::to_string(version) + " (expected " +
                          std::to_string(kVersion) + ")");
    const auto header_len = in.uint(8, "header length");
    if (header_len > in.remaining()) throw FormatError("model file truncated while reading header");
    auto header_text = in.take(header_len, "header");

    ModelSpec spec;
    TrainingRecord record;
    try {
        auto j = nlohmann::json::parse(header_text);
        spec.input_shape = j.at("input_shape").get<Shape>();
        spec.classes = j.at("classes").get<std::size_t>();
        spec.input_scale = j.at("input_scale").get<double>();
        for (const auto& l : j.at("layers")) spec.layers.push_back(parse_layer(l.get<std::string>()));
        if (j.contains("training")) {
            const auto& t = j["training"];
            record.seed = t.at("seed").get<std::uint64_t>();
            record.epochs = t.at("epochs").get<std::size_t>();
            record.train_accuracy = t.at("train_accuracy").get<double>();
            if (t.contains("test_accuracy")) record.test_accuracy = t["test_accuracy"].get<double>();
        }
        spec.layer_shapes();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed model header: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw FormatError(std::string("invalid model spec in header: ") + e.what());
    }

    const auto expected = spec.parameter_shapes();
    const auto count = in.uint(4, "parameter count");
    if (count != expected.size())
        throw FormatError("model declares " + std::to_string(count) + " parameter tensors, spec needs " +
                          std::to_string(expected.size()));
    std::vector<Tensor> params;
    for (std::size_t p = 0; p < count; ++p) {
        const auto rank = in.uint(4, "tensor rank");
        if (rank > 8) throw FormatError("implausible tensor rank " + std::to_string(rank));
        Shape shape;
        for (std::size_t r = 0; r < rank; ++r) shape.push_back(in.uint(8, "tensor dims"));
        const auto n = in.uint(8, "element count");
        if (shape != expected[p])
            throw FormatError("parameter " + std::to_string(p) + " declared as " + shape_string(shape) +
                              ", spec needs " + shape_string(expected[p]));
        if (n != element_count(shape))
            throw FormatError("parameter " + std::to_string(p) + " declares " + std::to_string(n) +
                              " elements for shape " + shape_string(shape));
        if (n > in.remaining() / 8) throw FormatError("model file truncated in parameter " + std::to_string(p));
        std::vector<double> values(n);
        for (auto& v : values) v = std::bit_cast<double>(in.uint(8, "parameter data"));
        try {
            params.emplace_back(std::move(shape), std::move(values));
        } catch (const InvalidArgument& e) {
            throw FormatError("parameter " + std::to_string(p) + ": " + e.what());
        }
    }
    if (in.remaining() != 0) throw FormatError(std::to_string(in.remaining()) + " trailing bytes after parameters");
    return TrainedModel(std::move(spec), std::move(params), record);
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    const auto bytes = serialize_model(model);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

TrainedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

std::string model_digest(const TrainedModel& model) { return short_digest(serialize(model, false)); }

}  // namespace advx
