#include "mtsdiag/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace mtsdiag {

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_cell(const std::string& raw, std::size_t row, std::size_t col,
                  const std::filesystem::path& path) {
    const std::string cell = trim(raw);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
        std::ostringstream msg;
        msg << path.string() << ": non-numeric cell at row " << row << ", column " << col;
        throw IngestError(msg.str());
    }
    return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open file: " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!trim(line).empty()) lines.push_back(line);
    }
    if (lines.empty()) throw IngestError("empty file: " + path.string());
    return lines;
}

} // namespace

SeriesMatrix load_series_csv(const std::filesystem::path& path, bool has_header) {
    const std::vector<std::string> lines = read_lines(path);

    std::size_t first_data = 0;
    std::vector<std::string> names;
    if (has_header) {
        if (lines.size() < 2) throw IngestError(path.string() + ": header row but no data rows");
        for (const auto& n : split_commas(lines[0])) names.push_back(trim(n));
        first_data = 1;
    }

    const std::size_t cols = split_commas(lines[first_data]).size();
    const std::size_t rows = lines.size() - first_data;
    if (has_header && names.size() != cols)
        throw IngestError(path.string() + ": header column count does not match data");

    Matrix values(static_cast<Index>(rows), static_cast<Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto cells = split_commas(lines[first_data + r]);
        // Row/column locations reported 1-based, counting data rows only.
        if (cells.size() != cols) {
            std::ostringstream msg;
            msg << path.string() << ": ragged row " << (r + 1) << " (expected " << cols
                << " columns, got " << cells.size() << ")";
            throw IngestError(msg.str());
        }
        for (std::size_t c = 0; c < cols; ++c)
            values(static_cast<Index>(r), static_cast<Index>(c)) =
                parse_cell(cells[c], r + 1, c + 1, path);
    }

    SeriesMatrix out;
    out.values = std::move(values);
    out.names = has_header ? names : default_names(static_cast<Index>(cols));
    out.validate();
    return out;
}

void write_series_csv(const std::filesystem::path& path, const SeriesMatrix& x) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write file: " + path.string());
    for (std::size_t i = 0; i < x.names.size(); ++i)
        out << (i ? "," : "") << x.names[i];
    out << "\n";
    out.precision(17);
    for (Index r = 0; r < x.values.rows(); ++r) {
        for (Index c = 0; c < x.values.cols(); ++c)
            out << (c ? "," : "") << x.values(r, c);
        out << "\n";
    }
}

namespace {

int parse_label_cell(const std::string& raw, std::size_t row, std::size_t col,
                     const std::filesystem::path& path) {
    const std::string cell = trim(raw);
    if (cell == "0") return 0;
    if (cell == "1") return 1;
    std::ostringstream msg;
    msg << path.string() << ": label cell at row " << row << ", column " << col
        << " must be 0 or 1, got '" << cell << "'";
    throw IngestError(msg.str());
}

} // namespace

BinaryMatrix load_dim_labels_csv(const std::filesystem::path& path, Index expected_cols) {
    const std::vector<std::string> lines = read_lines(path);
    const std::size_t cols = split_commas(lines[0]).size();
    if (expected_cols >= 0 && static_cast<Index>(cols) != expected_cols)
        throw IngestError(path.string() + ": label matrix has " + std::to_string(cols) +
                          " columns, expected " + std::to_string(expected_cols));
    BinaryMatrix m(static_cast<Index>(lines.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < lines.size(); ++r) {
        const auto cells = split_commas(lines[r]);
        if (cells.size() != cols)
            throw IngestError(path.string() + ": ragged row " + std::to_string(r + 1));
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) =
                parse_label_cell(cells[c], r + 1, c + 1, path);
    }
    return m;
}

BinaryVector load_point_labels_csv(const std::filesystem::path& path) {
    const BinaryMatrix m = load_dim_labels_csv(path, 1);
    return m.col(0);
}

void write_binary_matrix_csv(const std::filesystem::path& path, const BinaryMatrix& m) {
    std::ofstream out(path);
    if (!out) throw IngestError("cannot write file: " + path.string());
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c)
            out << (c ? "," : "") << m(r, c);
        out << "\n";
    }
}

void write_binary_vector_csv(const std::filesystem::path& path, const BinaryVector& v) {
    BinaryMatrix m(v.size(), 1);
    m.col(0) = v;
    write_binary_matrix_csv(path, m);
}

} // namespace mtsdiag
