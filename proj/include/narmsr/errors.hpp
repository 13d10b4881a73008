#pragma once

#include <stdexcept>
#include <string>

namespace narmsr {

// I/O failures (missing files, malformed image/kernel files).
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failures (singular systems, non-finite intermediates).
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration (inconsistent operator setup, unknown config keys).
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace narmsr
