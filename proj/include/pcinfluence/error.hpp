#pragma once

#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pcinfluence {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    non_finite,
    not_positive_definite,
    condition1_violation,
    convergence_failure,
    degenerate_sample,
    parse_error,
    io_error,
};

constexpr std::string_view code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::not_positive_definite: return "not_positive_definite";
        case ErrorCode::condition1_violation: return "condition1_violation";
        case ErrorCode::convergence_failure: return "convergence_failure";
        case ErrorCode::degenerate_sample: return "degenerate_sample";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when an eigenvalue is shared (to tolerance) across the S / S'
/// partition. Indices are 1-based, matching the user-facing convention.
class Condition1Error : public Error {
public:
    Condition1Error(std::size_t j, std::size_t r, double gap, const std::string& context = {})
        : Error(ErrorCode::condition1_violation,
                (context.empty() ? std::string{} : context + ": ") +
                    "eigenvalue gap between selected index " + std::to_string(j) +
                    " and complement index " + std::to_string(r) + " is " +
                    gap_text(gap)),
          j_(j), r_(r), gap_(gap) {}

    std::size_t selected_index() const noexcept { return j_; }
    std::size_t complement_index() const noexcept { return r_; }
    double gap() const noexcept { return gap_; }

private:
    static std::string gap_text(double gap) {
        std::ostringstream out;
        out.precision(6);
        out << gap;
        return out.str();
    }

    std::size_t j_;
    std::size_t r_;
    double gap_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

inline void require(bool condition, ErrorCode code, const char* detail) {
    if (!condition) throw Error(code, detail);
}

}  // namespace detail
}  // namespace pcinfluence
