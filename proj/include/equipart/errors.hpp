#pragma once

#include <stdexcept>
#include <string>

namespace equipart {

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

struct NotOrthogonal : Error {
  using Error::Error;
};
struct ClosureOverflow : Error {
  using Error::Error;
};
struct NotAHomomorphism : Error {
  using Error::Error;
};
struct MissingTransport : Error {
  using Error::Error;
};
struct PointLocationFailure : Error {
  using Error::Error;
};
struct NegativeInput : Error {
  using Error::Error;
};
struct ZeroComponent : Error {
  using Error::Error;
};
struct ComponentCollapse : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct NotBracketed : Error {
  using Error::Error;
};
struct InsufficientRange : Error {
  using Error::Error;
};
struct UnknownId : Error {
  using Error::Error;
};
struct IncompatibleMesh : Error {
  using Error::Error;
};

}  // namespace equipart
