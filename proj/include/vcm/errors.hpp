#pragma once

#include <stdexcept>
#include <string>

namespace vcm {

// Value outside the admissible range of an operation (negative tokens,
// nonpositive sigma, |r| >= 1, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed inputs whose shape is wrong: bad partitions, wrong roster size,
// rank-deficient design, inconsistent logs.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class LookupError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Caller violated a precondition that is not a data range issue.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double gradient_norm)
        : std::runtime_error(what), gradient_norm_(gradient_norm) {}
    double gradient_norm() const noexcept { return gradient_norm_; }

private:
    double gradient_norm_;
};

class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

}  // namespace vcm
