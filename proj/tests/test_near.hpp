#pragma once

#include <cmath>

// Absolute and relative closeness checks with explicit tolerances; doctest's
// Approx mixes a unit scale into the bound, which is wrong for small values.
#define CHECK_NEAR(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol))
#define CHECK_REL(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol) * std::abs(b))
