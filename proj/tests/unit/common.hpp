#pragma once

#include <fstream>
#include <sstream>
#include <string>

inline std::string source_path(const std::string& rel) { return std::string(HYDRANAV_SOURCE_DIR) + "/" + rel; }

inline std::string read_text(const std::string& rel) {
    std::ifstream in(source_path(rel));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
