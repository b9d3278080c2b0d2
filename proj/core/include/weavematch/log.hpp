#pragma once

#include <iostream>
#include <string>

namespace weavematch {

// Minimal logging: warnings go to stderr so they never pollute structured
// stdout output. Tests can silence them by swapping the stream.
inline std::ostream*& log_stream() {
    static std::ostream* s = &std::cerr;
    return s;
}

inline void log_warn(const std::string& msg) {
    *log_stream() << "[warn] " << msg << "\n";
}

inline void log_info(const std::string& msg) {
    *log_stream() << "[info] " << msg << "\n";
}

}  // namespace weavematch
