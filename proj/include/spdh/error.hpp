#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace spdh {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
template <typename... Args>
[[noreturn]] inline void raise(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  throw Error(os.str());
}
}  // namespace detail

}  // namespace spdh

// SPDH_REQUIRE(cond, "message", value, ...) -> throws spdh::Error on failure
#define SPDH_REQUIRE(cond, ...)                  \
  do {                                           \
    if (!(cond)) ::spdh::detail::raise(__VA_ARGS__); \
  } while (false)
