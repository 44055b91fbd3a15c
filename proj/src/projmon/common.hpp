#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace projmon {

// Error taxonomy shared by the core, the C API and the CLI exit codes.
enum class ErrorKind {
    invalid,  // bad arguments, malformed config, contract violations
    domain,   // numerically/statistically infeasible (degenerate LRV, singular system, ...)
    io,       // file and parse failures
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_invalid(const std::string& msg) { throw Error(ErrorKind::invalid, msg); }
[[noreturn]] inline void throw_domain(const std::string& msg) { throw Error(ErrorKind::domain, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }

// ceil/floor of m*x with a guard against binary representation noise
// (0.1 * 1000 is slightly above 100 in doubles; ceil must still give 100).
inline long ceil_index(double m_times_x) {
    return static_cast<long>(std::ceil(m_times_x - 1e-9));
}
inline long floor_index(double m_times_x) {
    return static_cast<long>(std::floor(m_times_x + 1e-9));
}

}  // namespace projmon
