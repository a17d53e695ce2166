#include "advx/dataio.hpp"
#include "advx/error.hpp"

namespace advx {

namespace {

void append_field(std::string& out, const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        out += field;
        return;
    }
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
}

void append_row(std::string& out, const CsvRow& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ',';
        append_field(out, row[i]);
    }
    out += "\r\n";
}

}  // namespace

std::string format_csv(const CsvRow& header, const std::vector<CsvRow>& rows) {
    std::string out;
    append_row(out, header);
    for (const auto& r : rows) {
        if (r.size() != header.size())
            throw InvalidArgument("CSV row has " + std::to_string(r.size()) + " fields, header has " +
                                  std::to_string(header.size()));
        append_row(out, r);
    }
    return out;
}

void write_csv(const std::vector<CsvRow>& rows, const CsvRow& header, const std::filesystem::path& path) {
    write_file(path, format_csv(header, rows));
}

}  // namespace advx
