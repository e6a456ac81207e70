#pragma once

#include <stdexcept>
#include <string>

namespace spectra {

/// Invalid or inconsistent experiment configuration (maps to CLI exit code 2).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation exceeded a configured resource budget.
class budget_error : public std::runtime_error {
public:
    explicit budget_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An iterative solver failed to reach its tolerance within its budget.
class convergence_error : public std::runtime_error {
public:
    explicit convergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// The negative part of a perturbation is not form bounded with bound < 1.
class klmn_error : public std::runtime_error {
public:
    explicit klmn_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace spectra
