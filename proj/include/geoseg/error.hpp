#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace geoseg {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input document. Carries the byte offset reported by the JSON parser.
class ParseError : public Error {
public:
    ParseError(std::size_t byte_offset, const std::string& what)
        : Error("parse error at byte " + std::to_string(byte_offset) + ": " + what),
          byte_offset_(byte_offset) {}

    std::size_t byte_offset() const { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

/// One validation finding. Serialized as SEVERITY<TAB>entity<TAB>message.
struct Finding {
    enum class Severity { warning, error };

    Severity severity = Severity::error;
    std::string entity;
    std::string message;

    std::string to_line() const {
        return std::string(severity == Severity::error ? "ERROR" : "WARNING") + "\t" +
               entity + "\t" + message;
    }
};

/// Structurally well-formed input that violates a document invariant.
/// Keeps every finding so callers can emit a full report.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Finding> findings)
        : Error(summarize(findings)), findings_(std::move(findings)) {}

    const std::vector<Finding>& findings() const { return findings_; }

private:
    static std::string summarize(const std::vector<Finding>& findings) {
        std::size_t errors = 0;
        for (const auto& f : findings)
            if (f.severity == Finding::Severity::error) ++errors;
        std::string msg = "validation failed with " + std::to_string(errors) + " error(s)";
        for (const auto& f : findings) {
            if (f.severity != Finding::Severity::error) continue;
            msg += "\n  " + f.entity + ": " + f.message;
        }
        return msg;
    }

    std::vector<Finding> findings_;
};

}  // namespace geoseg
