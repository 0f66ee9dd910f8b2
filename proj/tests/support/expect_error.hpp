#pragma once

#include <gtest/gtest.h>

#include "bitshift/error.hpp"

#define EXPECT_ERROR_CODE(statement, expected)                                   \
  do {                                                                           \
    try {                                                                        \
      statement;                                                                 \
      ADD_FAILURE() << "no bitshift::Error thrown by " #statement;               \
    } catch (const ::bitshift::Error& e) {                                       \
      EXPECT_EQ(e.code(), (expected)) << e.what();                               \
    }                                                                            \
  } while (0)
