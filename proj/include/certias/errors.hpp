#pragma once

#include <stdexcept>
#include <string>

namespace certias {

/// Malformed or inconsistent user input (problem files, settings, flags).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The LP kernel or a factorization could not finish reliably.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Fourier-Motzkin produced more intermediate rows than allowed.
class RowExplosionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Certification spawned more regions than the configured budget.
class BudgetExceededError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An optimization problem that was required to have a solution has none.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace certias
