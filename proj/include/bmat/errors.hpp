#pragma once

#include <stdexcept>
#include <string>

namespace bmat {

// Bad or missing input: files, schemas, references, configuration. CLI exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Non-finite posterior, failed initialization and similar. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace bmat
