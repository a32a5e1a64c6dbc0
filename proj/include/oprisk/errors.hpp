#pragma once

#include <stdexcept>
#include <string>

namespace oprisk {

// Malformed or out-of-domain input: bad parameters, bad files, bad flags.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Well-formed input on which a method cannot produce an answer
// (undefined SLA quantile, Panjer underflow, degenerate fit data, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace oprisk
