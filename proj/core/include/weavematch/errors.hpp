#pragma once

#include <stdexcept>
#include <string>

namespace weavematch {

// Failure categories. The CLI maps these onto distinct process exit codes
// (see cli.hpp); library code just throws the right subclass.
enum class ErrorKind {
    Config,   // invalid parameters or malformed configuration
    Data,     // bad inputs: undersized images, manifest violations, bad labels
    Numeric,  // non-finite loss, undefined divergence, missing spectral peak
    Io,       // filesystem and codec failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg)
        : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::Config, m) {}
};
struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorKind::Data, m) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ErrorKind::Numeric, m) {}
};
struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

}  // namespace weavematch
