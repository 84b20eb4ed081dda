#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dynamo {

// Input that violates a documented contract: malformed files, invalid
// configurations, broken sequence invariants.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& message) : std::runtime_error(message) {}

    ValidationError(const std::string& message, std::string path, std::optional<std::size_t> line = {})
        : std::runtime_error(compose(message, path, line)), path_(std::move(path)), line_(line) {}

    const std::string& path() const noexcept { return path_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    static std::string compose(const std::string& message, const std::string& path,
                               std::optional<std::size_t> line) {
        std::string out = path;
        if (line) out += ":" + std::to_string(*line);
        if (!out.empty()) out += ": ";
        return out + message;
    }

    std::string path_;
    std::optional<std::size_t> line_;
};

// Arrays or windows of incompatible width.
class DimensionError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

}  // namespace dynamo
