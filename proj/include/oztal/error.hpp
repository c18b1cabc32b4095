#pragma once

#include <stdexcept>
#include <string>

namespace oztal {

// Every failure in the library surfaces as an Error carrying a readable message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace oztal
