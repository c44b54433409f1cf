// Copyright 2026 The schedlab Authors
//
// Use of this source code is governed by a BSD-style
// license that can be found in the LICENSE file.

#ifndef SCHEDLAB_LOGGING_H_
#define SCHEDLAB_LOGGING_H_

#include <cstdio>
#include <cstdlib>

namespace schedlab::internal {

[[noreturn]] inline void CheckFail(const char* file, int line,
                                   const char* expr) {
  std::fprintf(stderr, "CHECK failed at %s:%d: %s\n", file, line, expr);
  std::fflush(stderr);
  std::abort();
}

}  // namespace schedlab::internal

#define CHECK(cond)                                            \
  do {                                                         \
    if (!(cond)) {                                             \
      ::schedlab::internal::CheckFail(__FILE__, __LINE__, #cond); \
    }                                                          \
  } while (0)

#define CHECK_EQ(a, b) CHECK((a) == (b))
#define CHECK_NE(a, b) CHECK((a) != (b))
#define CHECK_GE(a, b) CHECK((a) >= (b))
#define CHECK_GT(a, b) CHECK((a) > (b))
#define CHECK_LE(a, b) CHECK((a) <= (b))
#define CHECK_LT(a, b) CHECK((a) < (b))

#endif  // SCHEDLAB_LOGGING_H_
