#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>

#include "emhnet/error.hpp"

namespace emhnet {

/// Shortest decimal text that parses back to the same double.
inline std::string format_real(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

}  // namespace emhnet
