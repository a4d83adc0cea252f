#pragma once

#include <stdexcept>
#include <string>

namespace loopforge {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    // Rendered as "location: path: detail", skipping empty parts. `location`
    // names the file and/or line, `path` is a JSON pointer.
    explicit ConfigError(std::string detail, std::string path = {}, std::string location = {})
        : Error(compose(location, path, detail)),
          detail_(std::move(detail)),
          path_(std::move(path)),
          location_(std::move(location)) {}

    const std::string& detail() const noexcept { return detail_; }
    const std::string& path() const noexcept { return path_; }
    const std::string& location() const noexcept { return location_; }

private:
    static std::string compose(const std::string& location, const std::string& path,
                               const std::string& detail) {
        std::string out;
        for (const std::string* part : {&location, &path}) {
            if (!part->empty()) out += *part + ": ";
        }
        return out + detail;
    }

    std::string detail_;
    std::string path_;
    std::string location_;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

// Plant or sensor state left the finite domain.
class DivergenceError : public NumericError {
public:
    using NumericError::NumericError;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class ActionError : public Error {
public:
    using Error::Error;
};

class EfficiencyError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class MetricsError : public Error {
public:
    using Error::Error;
};

class ExportError : public Error {
public:
    using Error::Error;
};

} // namespace loopforge
