#pragma once

#include <string>
#include <string_view>

namespace rwr {

// Reads a whole file; DataError tagged with `what` on failure.
std::string read_file(const std::string& path, const std::string& what);

// Writes via <path>.tmp then rename, so failures never leave partial output.
void write_file_atomic(const std::string& path, std::string_view bytes,
                       const std::string& what);

}  // namespace rwr
