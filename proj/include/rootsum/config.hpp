#pragma once

#include <cstdint>

namespace rootsum {

/// Largest supported number of primes in a multiquadratic basis.
inline constexpr int max_tau = 6;

/// Default cap on the number of points an exhaustive enumeration may visit.
inline constexpr std::uint64_t default_enum_cap = 8'000'000;

/// Default ceiling for precision escalation, in bits.
inline constexpr long default_bit_budget = 4096;

/// Starting precision for every escalation loop.
inline constexpr long initial_bits = 64;

} // namespace rootsum
