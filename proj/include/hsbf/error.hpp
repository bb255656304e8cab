#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hsbf {

//! Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Two elements (or an element and an operator) live in different spaces.
class SpaceMismatch : public Error
{
public:
  using Error::Error;
};

//! A value violates the invariants of its type (simplex sums, positivity,
//! unit norm, tangency, ...).
class InvariantViolation : public Error
{
public:
  using Error::Error;
};

//! Exponentiation under/overflow or a density below the positivity floor.
class NumericError : public Error
{
public:
  using Error::Error;
};

//! A point lies outside the domain on which a quantity is defined.
class OutOfDomain : public Error
{
public:
  using Error::Error;
};

//! Some grid node of predictor `predictor` has no in-domain observation
//! within one bandwidth.
class ConditionAViolation : public Error
{
public:
  ConditionAViolation(std::size_t predictor, std::size_t node, std::string msg)
    : Error(std::move(msg))
    , predictor_(predictor)
    , node_(node)
  {
  }
  std::size_t predictor() const { return predictor_; }
  std::size_t node() const { return node_; }

private:
  std::size_t predictor_;
  std::size_t node_;
};

//! An iterative procedure stopped at its iteration cap.
class ConvergenceError : public Error
{
public:
  ConvergenceError(std::string msg, std::vector<double> history)
    : Error(std::move(msg))
    , history_(std::move(history))
  {
  }
  //! Per-iteration convergence values up to the cap.
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

//! A reconstructed density vanishes at a grid node because the bandwidth is
//! too small for the sample.
class BandwidthTooSmall : public Error
{
public:
  BandwidthTooSmall(std::size_t node, std::string msg)
    : Error(std::move(msg))
    , node_(node)
  {
  }
  std::size_t node() const { return node_; }

private:
  std::size_t node_;
};

//! Every bandwidth candidate of some predictor is infeasible.
class BandwidthSelectionError : public Error
{
public:
  BandwidthSelectionError(std::size_t predictor, std::string msg)
    : Error(std::move(msg))
    , predictor_(predictor)
  {
  }
  std::size_t predictor() const { return predictor_; }

private:
  std::size_t predictor_;
};

//! A Riemannian log or transport was requested at the cut locus.
class CutLocusError : public Error
{
public:
  using Error::Error;
};

} // namespace hsbf
