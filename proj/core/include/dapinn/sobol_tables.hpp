#pragma once

#include <cstdint>

namespace dapinn::detail {

// Joe-Kuo primitive polynomials and initial direction numbers (the
// new-joe-kuo-6 set) for Sobol dimensions 2..64. Row k covers dimension
// k+2; dimension 1 uses all-ones m values and is handled in code.
struct SobolRow {
  std::uint32_t poly;   // full polynomial encoding, MSB = x^degree
  std::uint8_t degree;
  std::uint32_t m[9];   // first `degree` initial values
};

extern const SobolRow kSobolRows[63];

}  // namespace dapinn::detail
