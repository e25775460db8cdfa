#pragma once

#include <doctest.h>

// Purely relative comparison; doctest's default scale of 1 would make
// every check on a nanosecond or a rate meaningless.
inline doctest::Approx approx(double v) { return doctest::Approx(v).scale(0.0); }
