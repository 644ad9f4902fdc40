#pragma once

#include <stdexcept>
#include <string>

namespace redodom {

/// Malformed input data; the message names the file and the location.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file that cannot be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace redodom
