#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "rootsum/dyadic.hpp"

namespace rootsum {

/// Inputs that violate an operation's contract (mixed bases, malformed elements).
class usage_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An exhaustive enumeration would exceed the configured point budget.
class capacity_error : public std::runtime_error {
public:
    capacity_error(const std::string& what, std::uint64_t required, std::uint64_t cap)
        : std::runtime_error(what + ": requires " + std::to_string(required) + " points, cap is " + std::to_string(cap)),
          required_(required), cap_(cap) {}

    std::uint64_t required() const { return required_; }
    std::uint64_t cap() const { return cap_; }

private:
    std::uint64_t required_;
    std::uint64_t cap_;
};

/// Precision escalation hit the bit budget; carries the last enclosure.
class budget_error : public std::runtime_error {
public:
    budget_error(const std::string& what, DyadicInterval best, long bits)
        : std::runtime_error(what + " (bit budget " + std::to_string(bits) + " exhausted)"), best_(std::move(best)),
          bits_(bits) {}

    const DyadicInterval& best() const { return best_; }
    long bits() const { return bits_; }

private:
    DyadicInterval best_;
    long bits_;
};

/// A search over a finite schedule found nothing acceptable.
class not_found_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace rootsum
