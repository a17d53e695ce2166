#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advx/model.hpp"
#include "advx/tensor.hpp"

namespace advx {

struct Dataset {
    std::string name;
    std::string split;
    std::size_t classes = 10;
    std::vector<LabeledExample> examples;

    std::size_t size() const { return examples.size(); }
    const LabeledExample& operator[](std::size_t i) const { return examples.at(i); }
};

// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
// Gzip-compressed files are accepted transparently. Pixels become doubles
// in [0, 255] with shape [1, rows, cols].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 std::size_t classes = 10);

// Indices into a dataset, all correctly classified by the screened models.
struct EvalSubset {
    std::vector<std::size_t> indices;
    std::vector<std::string> model_digests;
    std::uint64_t seed = 0;
};

// Draws `n` indices without replacement from the examples every model
// classifies correctly. With min_per_class > 0, that many are first drawn
// from each class pool and the rest uniformly from what remains. Result is
// sorted ascending.
EvalSubset select_eval_subset(std::span<const TrainedModel> models, const Dataset& dataset, std::size_t n,
                              std::uint64_t seed, std::size_t min_per_class = 0);

// Throws FingerprintMismatch if `models` are not the ones the subset was
// screened against.
void check_screened(const EvalSubset& subset, std::span<const TrainedModel> models);

std::vector<LabeledExample> subset_examples(const Dataset& dataset, const EvalSubset& subset);

std::string subset_to_json(const EvalSubset& subset);
EvalSubset subset_from_json(const std::string& text);

enum class ImageFormat { PGM, PNG };

ImageFormat image_format_for(const std::filesystem::path& path);

// Rank-2 [h, w] or rank-3 [1, h, w] tensors with values in [0, 255].
// Pixels are rounded to nearest; out-of-range values are rejected.
std::string encode_pgm(const Tensor& image);
std::string encode_png(const Tensor& image);
void export_image(const Tensor& image, const std::filesystem::path& path, ImageFormat format);

// Reads back binary PGM (P5, maxval 255) or 8-bit grayscale PNG as [1, h, w].
Tensor decode_pgm(std::string_view bytes);
Tensor decode_png(std::string_view bytes);
Tensor import_image(const std::filesystem::path& path);

// Places images side by side with a `gap`-pixel black separator.
Tensor side_by_side(std::span<const Tensor> images, std::size_t gap = 2);

using CsvRow = std::vector<std::string>;

std::string format_csv(const CsvRow& header, const std::vector<CsvRow>& rows);
void write_csv(const std::vector<CsvRow>& rows, const CsvRow& header, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace advx
