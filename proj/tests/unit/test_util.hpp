#pragma once

#include <initializer_list>

#include "msbound/errors.hpp"
#include "msbound/linalg.hpp"

inline msbound::Vector vec(std::initializer_list<double> xs) {
  msbound::Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

#define EXPECT_ERROR_KIND(stmt, expected_kind)                                   \
  do {                                                                           \
    try {                                                                        \
      (void)(stmt);                                                              \
      ADD_FAILURE() << "expected msbound::Error from " #stmt;                    \
    } catch (const msbound::Error& e_) {                                         \
      EXPECT_EQ(e_.kind(), expected_kind) << e_.what();                          \
    }                                                                            \
  } while (0)
