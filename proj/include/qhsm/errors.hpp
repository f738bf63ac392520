#pragma once

#include <stdexcept>
#include <string>

namespace qhsm {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operands belong to different group instances.
class ParamMismatchError : public Error {
public:
    using Error::Error;
};

// Malformed or non-canonical serialized data.
class EncodingError : public Error {
public:
    using Error::Error;
};

// A protocol-level contract was violated (wrong phase, bad counts, ...).
class ProtocolError : public Error {
public:
    using Error::Error;
};

}  // namespace qhsm
