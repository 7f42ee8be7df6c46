#ifndef BNMOE_TEXTIO_HPP
#define BNMOE_TEXTIO_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "bnmoe/common.hpp"

namespace bnmoe {

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path);
    out << text;
    out.flush();
    if (!out) throw FileError("short write to " + path);
}

}  // namespace bnmoe

#endif
