#pragma once

#include <string>
#include <vector>

namespace stripres {

// Full-precision decimal rendering that round-trips IEEE doubles.
std::string fmt17(double x);

// Writes content to path via a temp file in the same directory + rename.
void atomic_write_text(const std::string& path, const std::string& content);

void ensure_dir(const std::string& path);

std::string join_csv_row(const std::vector<std::string>& fields);

// Minimal CSV reader for the emitted tables (no quoting/escapes in schema).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace stripres
