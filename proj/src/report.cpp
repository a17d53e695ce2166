#include <cstdio>
#include <sstream>

#include "advx/error.hpp"
#include "advx/format.hpp"
#include "advx/harness.hpp"

namespace advx {

namespace {

std::string pct(double v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string value_text(const SweepResult& sweep, double v) {
    return sweep.parameter == "iterations" ? std::to_string(static_cast<std::size_t>(v)) : format_double(v);
}

}  // namespace

std::string matrix_csv(std::span<const TransferMatrix> matrices, const std::string& run_fingerprint) {
    if (matrices.empty()) throw InvalidArgument("matrix_csv: nothing to render");
    CsvRow header{"source", "method"};
    for (const auto& t : matrices[0].targets) header.push_back(t);
    header.push_back("config_fingerprint");
    std::vector<CsvRow> rows;
    for (std::size_t s = 0; s < matrices[0].sources.size(); ++s)
        for (const auto& m : matrices) {
            if (m.targets != matrices[0].targets || m.sources != matrices[0].sources)
                throw InvalidArgument("matrix_csv: matrices over different model suites");
            CsvRow row{m.sources[s], to_string(m.method)};
            for (double r : m.rates[s]) row.push_back(format_double(r));
            row.push_back(run_fingerprint + ":" + m.config_fingerprint);
            rows.push_back(std::move(row));
        }
    return format_csv(header, rows);
}

std::string sweep_csv(const SweepResult& sweep, const std::string& run_fingerprint) {
    CsvRow header{sweep.parameter};
    for (auto m : sweep.methods)
        for (const auto& t : sweep.targets) header.push_back(to_string(m) + "/" + t);
    header.push_back("config_fingerprint");
    std::vector<CsvRow> rows;
    for (std::size_t v = 0; v < sweep.values.size(); ++v) {
        CsvRow row{value_text(sweep, sweep.values[v])};
        for (const auto& per_target : sweep.rates[v])
            for (double r : per_target) row.push_back(format_double(r));
        row.push_back(run_fingerprint + ":" + sweep.fixed_fingerprint);
        rows.push_back(std::move(row));
    }
    return format_csv(header, rows);
}

std::string matrix_summary(std::span<const TransferMatrix> matrices, const std::string& run_fingerprint) {
    if (matrices.empty()) throw InvalidArgument("matrix_summary: nothing to render");
    std::ostringstream os;
    os << "NewType success rate (%), rows: attacked model / method, columns: evaluated model, * = white-box\n";
    os << "config " << run_fingerprint << "\n\n";
    const auto& targets = matrices[0].targets;
    os << pad("source", 10) << pad("method", 10);
    for (const auto& t : targets) os << pad(t, 10);
    os << "\n";
    for (std::size_t s = 0; s < matrices[0].sources.size(); ++s)
        for (const auto& m : matrices) {
            os << pad(m.sources[s], 10) << pad(to_string(m.method), 10);
            for (std::size_t t = 0; t < targets.size(); ++t)
                os << pad(pct(m.rates[s][t]) + (m.white_box(s, t) ? "*" : " "), 10);
            os << "\n";
        }
    return os.str();
}

std::string sweep_summary(const SweepResult& sweep, const std::string& run_fingerprint) {
    std::ostringstream os;
    os << "NewType success rate (%) vs " << sweep.parameter << ", examples generated on " << sweep.source
       << ", * = white-box\n";
    os << "config " << run_fingerprint << ":" << sweep.fixed_fingerprint << "\n";
    for (std::size_t mi = 0; mi < sweep.methods.size(); ++mi) {
        os << "\n" << to_string(sweep.methods[mi]) << "\n" << pad(sweep.parameter, 12);
        for (const auto& t : sweep.targets) os << pad(t, 10);
        os << "\n";
        for (std::size_t v = 0; v < sweep.values.size(); ++v) {
            os << pad(value_text(sweep, sweep.values[v]), 12);
            for (std::size_t t = 0; t < sweep.targets.size(); ++t)
                os << pad(pct(sweep.rates[v][mi][t]) + (sweep.targets[t] == sweep.source ? "*" : " "), 10);
            os << "\n";
        }
    }
    return os.str();
}

std::filesystem::path render_report(std::span<const TransferMatrix> matrices, const std::filesystem::path& out_dir,
                                    const std::string& stem, const std::string& run_fingerprint) {
    std::filesystem::create_directories(out_dir);
    const auto csv = out_dir / (stem + ".csv");
    write_file(csv, matrix_csv(matrices, run_fingerprint));
    write_file(out_dir / (stem + ".txt"), matrix_summary(matrices, run_fingerprint));
    return csv;
}

std::filesystem::path render_report(const SweepResult& sweep, const std::filesystem::path& out_dir,
                                    const std::string& stem, const std::string& run_fingerprint) {
    std::filesystem::create_directories(out_dir);
    const auto csv = out_dir / (stem + ".csv");
    write_file(csv, sweep_csv(sweep, run_fingerprint));
    write_file(out_dir / (stem + ".txt"), sweep_summary(sweep, run_fingerprint));
    return csv;
}

}  // namespace advx
