#pragma once

#include <gtest/gtest.h>

#include "altprobe/error.hpp"
#include "scratch.hpp"

namespace altprobe::testing {

/// Code of the altprobe::Error thrown by `f`; fails the test if none is.
template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no altprobe::Error thrown";
  return ErrorCode::IoError;
}

}  // namespace altprobe::testing
