#pragma once

#include <stdexcept>
#include <string>

namespace ugwb {

/// Base for every error this library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

class InvalidLambda : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class WindowTouchesSpectrum : public Error {
public:
    using Error::Error;
};

class DegenerateFit : public Error {
public:
    using Error::Error;
};

class TooFewRadii : public Error {
public:
    using Error::Error;
};

class BoxExceedsGrid : public Error {
public:
    using Error::Error;
};

class KernelFormatError : public Error {
public:
    using Error::Error;
};

}  // namespace ugwb
