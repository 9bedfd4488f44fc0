#pragma once

#include <stdexcept>
#include <string>

namespace cosso {

// Malformed user input: bad CSV cells, dimension mismatches, out-of-range
// options.  The CLI maps these to exit code 1.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric routine could not certify its result: singular system past the
// jitter fallback, iteration cap hit, degenerate GCV trace.  Exit code 2.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A "cannot happen" condition: monotone descent broken, certificate failed on
// a path that must produce one.  Indicates a bug rather than bad input or a
// hard problem instance.  Exit code 3.
class internal_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cosso
