#pragma once

#include <stdexcept>
#include <string>

namespace ecd {

// Base of every error raised by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

class DomainError : public Error
{
  public:
    using Error::Error;
};

// A retarded/advanced light-cone root or a slice crossing is not covered by the samples.
class CoverageError : public Error
{
  public:
    using Error::Error;
};

class SingularityError : public Error
{
  public:
    using Error::Error;
};

class RangeError : public Error
{
  public:
    using Error::Error;
};

class UnsupportedError : public Error
{
  public:
    using Error::Error;
};

class NumericFailure : public Error
{
  public:
    NumericFailure(const std::string& what, double s)
        : Error(what + " (s = " + std::to_string(s) + ")"), s_(s)
    {
    }
    double s() const { return s_; }

  private:
    double s_;
};

// Quadrature or iteration did not reach the requested accuracy.
class AccuracyError : public Error
{
  public:
    AccuracyError(const std::string& what, double achieved)
        : Error(what + " (achieved estimate " + std::to_string(achieved) + ")"),
          achieved_(achieved)
    {
    }
    double achieved() const { return achieved_; }

  private:
    double achieved_;
};

class NoPathError : public Error
{
  public:
    using Error::Error;
};

class ValidationError : public Error
{
  public:
    using Error::Error;
};

} // namespace ecd
