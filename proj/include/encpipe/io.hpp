#pragma once

#include <filesystem>
#include <string>

#include "encpipe/types.hpp"

namespace encpipe {

enum class MatrixFormat { csv, emx };

// Picks csv/emx from the file extension; anything else is a DataError.
MatrixFormat format_from_path(const std::filesystem::path& path);

TimeSeriesMatrix load_matrix(const std::filesystem::path& path, MatrixFormat format);
TimeSeriesMatrix load_matrix(const std::filesystem::path& path);

// CSV always gets a header row (c0..c{D-1} when the matrix carries no names)
// and prints values so that a reload reproduces them exactly.  EMX roundtrips
// bit-for-bit.
void save_matrix(const TimeSeriesMatrix& m, const std::filesystem::path& path, MatrixFormat format);
void save_matrix(const TimeSeriesMatrix& m, const std::filesystem::path& path);

// clip_id,start_row,length per line, 0-based contiguous starts
ClipIndex load_clip_index(const std::filesystem::path& path);
void save_clip_index(const ClipIndex& idx, const std::filesystem::path& path);

// Exact decimal formatting for doubles: shortest of %.15g / %.16g / %.17g
// that parses back to the same bits.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

} // namespace encpipe
