#pragma once

#include <functional>
#include <optional>

#include "bciflow/errors.hpp"

namespace bciflow::test {

/// Runs f and reports the Errc it threw, if any.
inline std::optional<Errc> thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& err) {
    return err.code();
  }
  return std::nullopt;
}

}  // namespace bciflow::test
