#include "encpipe/io.hpp"

#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "encpipe/error.hpp"

namespace encpipe {

namespace {

std::string path_str(const std::filesystem::path& p) { return p.string(); }

void store_u64le(std::uint64_t v, unsigned char out[8]) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
}

std::uint64_t load_u64le(const unsigned char in[8]) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
    return v;
}

bool parse_double(const std::string& token, double& out) {
    const char* begin = token.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') return false;
    out = v;
    return true;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    for (auto& f : fields) {
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t')) f.pop_back();
        std::size_t lead = 0;
        while (lead < f.size() && (f[lead] == ' ' || f[lead] == '\t')) ++lead;
        if (lead) f.erase(0, lead);
    }
    return fields;
}

TimeSeriesMatrix load_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path_str(path));

    std::string line;
    std::size_t lineno = 0;
    std::vector<std::string> names;
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    bool saw_any = false;

    while (std::getline(in, line)) {
        ++lineno;
        if (!saw_any && line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (line.empty()) {
            // blank trailing line is fine, anything after it is not
            std::string rest;
            while (std::getline(in, rest)) {
                if (!rest.empty())
                    throw DataError(path_str(path) + ": unexpected content after blank line " +
                                    std::to_string(lineno));
            }
            break;
        }
        if (!saw_any) {
            saw_any = true;
            // header detection: any non-numeric cell in the first row
            bool numeric = true;
            double tmp;
            for (const auto& f : fields)
                if (!parse_double(f, tmp)) { numeric = false; break; }
            cols = fields.size();
            if (!numeric) {
                names.assign(fields.begin(), fields.end());
                continue;
            }
        }
        if (fields.size() != cols)
            throw DataError(path_str(path) + ": ragged row at line " + std::to_string(lineno));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v;
            if (!parse_double(fields[c], v))
                throw DataError(path_str(path) + ": non-numeric cell at line " +
                                std::to_string(lineno) + ", column " + std::to_string(c + 1));
            if (!std::isfinite(v))
                throw DataError(path_str(path) + ": non-finite value at line " +
                                std::to_string(lineno) + ", column " + std::to_string(c + 1));
            values.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw DataError(path_str(path) + ": no data rows");
    return TimeSeriesMatrix::from_data(rows, cols, std::move(values), std::move(names));
}

TimeSeriesMatrix load_emx(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path_str(path));

    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "EMX1", 4) != 0)
        throw DataError(path_str(path) + ": not an EMX file (bad magic)");

    unsigned char dims[16];
    if (!in.read(reinterpret_cast<char*>(dims), 16))
        throw DataError(path_str(path) + ": truncated EMX header");
    const std::uint64_t rows = load_u64le(dims);
    const std::uint64_t cols = load_u64le(dims + 8);
    if (rows == 0 || cols == 0)
        throw DataError(path_str(path) + ": EMX dimensions must be positive");
    const std::uint64_t count = rows * cols;
    if (count / cols != rows || count > std::numeric_limits<std::size_t>::max() / 16)
        throw DataError(path_str(path) + ": EMX dimensions overflow");

    std::vector<double> values(static_cast<std::size_t>(count));
    std::vector<unsigned char> raw(static_cast<std::size_t>(count) * 8);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
        throw DataError(path_str(path) + ": truncated EMX payload");
    char probe;
    if (in.read(&probe, 1))
        throw DataError(path_str(path) + ": trailing bytes after EMX payload");

    for (std::size_t i = 0; i < values.size(); ++i)
        values[i] = std::bit_cast<double>(load_u64le(raw.data() + i * 8));
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw DataError(path_str(path) + ": non-finite value at row " +
                            std::to_string(i / cols) + ", column " + std::to_string(i % cols));

    return TimeSeriesMatrix::from_data(static_cast<std::size_t>(rows),
                                       static_cast<std::size_t>(cols), std::move(values), {});
}

void save_csv(const TimeSeriesMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path_str(path));

    const auto& names = m.channel_names();
    for (std::size_t c = 0; c < m.cols(); ++c) {
        if (c) out << ',';
        if (c < names.size() && !names[c].empty()) out << names[c];
        else out << 'c' << c;
    }
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        const double* row = m.row(r);
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ',';
            out << format_double(row[c]);
        }
        out << '\n';
    }
    if (!out) throw DataError("write failed for " + path_str(path));
}

void save_emx(const TimeSeriesMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path_str(path));

    out.write("EMX1", 4);
    unsigned char dims[16];
    store_u64le(m.rows(), dims);
    store_u64le(m.cols(), dims + 8);
    out.write(reinterpret_cast<const char*>(dims), 16);

    std::vector<unsigned char> raw(m.rows() * m.cols() * 8);
    const double* data = m.data();
    for (std::size_t i = 0; i < m.rows() * m.cols(); ++i)
        store_u64le(std::bit_cast<std::uint64_t>(data[i]), raw.data() + i * 8);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw DataError("write failed for " + path_str(path));
}

} // namespace

std::string format_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

MatrixFormat format_from_path(const std::filesystem::path& path) {
    const std::string ext = path.extension().string();
    if (ext == ".csv") return MatrixFormat::csv;
    if (ext == ".emx") return MatrixFormat::emx;
    throw DataError("cannot infer matrix format from extension of " + path_str(path) +
                    " (expected .csv or .emx)");
}

TimeSeriesMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format) {
    return format == MatrixFormat::csv ? load_csv(path) : load_emx(path);
}

TimeSeriesMatrix load_matrix(const std::filesystem::path& path) {
    return load_matrix(path, format_from_path(path));
}

void save_matrix(const TimeSeriesMatrix& m, const std::filesystem::path& path, MatrixFormat format) {
    if (format == MatrixFormat::csv) save_csv(m, path);
    else save_emx(m, path);
}

void save_matrix(const TimeSeriesMatrix& m, const std::filesystem::path& path) {
    save_matrix(m, path, format_from_path(path));
}

ClipIndex load_clip_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path_str(path));

    std::vector<ClipSpan> spans;
    std::string line;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 3)
            throw DataError(path_str(path) + ": clip index row at line " + std::to_string(lineno) +
                            " needs clip_id,start_row,length");
        if (first) {
            first = false;
            double tmp;
            if (!parse_double(fields[1], tmp)) continue; // header row
        }
        double start, length;
        if (!parse_double(fields[1], start) || !parse_double(fields[2], length) ||
            start < 0 || length <= 0 || start != std::floor(start) || length != std::floor(length))
            throw DataError(path_str(path) + ": bad clip bounds at line " + std::to_string(lineno));
        spans.push_back({fields[0], static_cast<std::size_t>(start), static_cast<std::size_t>(length)});
    }
    if (spans.empty()) throw DataError(path_str(path) + ": empty clip index");
    return ClipIndex(std::move(spans));
}

void save_clip_index(const ClipIndex& idx, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path_str(path));
    out << "clip_id,start_row,length\n";
    for (const auto& span : idx.spans())
        out << span.clip_id << ',' << span.start << ',' << span.length << '\n';
    if (!out) throw DataError("write failed for " + path_str(path));
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path_str(path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path_str(path));
    out << content;
    if (!out) throw DataError("write failed for " + path_str(path));
}

} // namespace encpipe
