#pragma once

#include <stdexcept>
#include <string>

namespace strainveil {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or missing input: files, formats, landmark data, arguments.
class InputError : public Error {
public:
    using Error::Error;
};

/// A processing stage failed on otherwise well-formed input.
class PipelineError : public Error {
public:
    PipelineError(const std::string& what, long frame_index = -1)
        : Error(frame_index >= 0 ? "frame " + std::to_string(frame_index) + ": " + what : what),
          frame_index_(frame_index) {}

    long frame_index() const { return frame_index_; }

private:
    long frame_index_;
};

}  // namespace strainveil
