#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace arxrls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Polynomial orders of an ARX model: m lags of the output, n of the input.
struct ModelOrders
{
    std::size_t m = 0;
    std::size_t n = 0;

    std::size_t dim() const { return m + n; }
};

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Caller-supplied data violates a documented precondition.
class InvalidInput : public Error
{
public:
    using Error::Error;
};

/// The data are well formed but carry no information for the requested
/// statistic (zero moments, singular information matrix, ...).
class DegenerateData : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

} // namespace arxrls
