#pragma once

#include <doctest.h>

#include "bridgedist/errors.hpp"

// Asserts that `expr` throws bridgedist::Error carrying `errc`.
#define CHECK_ERRC(expr, errc)                                   \
  do {                                                           \
    bool threw_ = false;                                         \
    try {                                                        \
      (void)(expr);                                              \
    } catch (const ::bridgedist::Error& e_) {                    \
      threw_ = true;                                             \
      CHECK_MESSAGE(e_.code() == (errc), e_.what());             \
    }                                                            \
    CHECK_MESSAGE(threw_, "expected " #errc " from " #expr);     \
  } while (false)
