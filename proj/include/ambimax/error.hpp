#ifndef AMBIMAX_ERROR_HPP
#define AMBIMAX_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ambimax {

/// Broad failure classes; the CLI maps each to its own exit code.
enum class ErrorKind {
    domain,     ///< violated precondition or assumption
    schema,     ///< malformed configuration document
    numerical,  ///< bracket failure, non-convergence
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& what) : Error(ErrorKind::schema, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw DomainError(what);
}

}  // namespace detail
}  // namespace ambimax

#endif
