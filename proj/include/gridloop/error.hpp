#pragma once

#include <stdexcept>
#include <string>

namespace gridloop {

/// Raised for every data, configuration and domain error in the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace gridloop
