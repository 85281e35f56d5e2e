#ifndef SPHERECAL_ERROR_HPP
#define SPHERECAL_ERROR_HPP

#include <stdexcept>
#include <string>

namespace spherecal {

// Base class for all library failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A transformed point has camera-frame depth <= 0. Carries the offending
// view/point indices when known (-1 otherwise).
struct NonPositiveDepth : Error {
  explicit NonPositiveDepth(const std::string& msg, int view = -1, int point = -1)
      : Error(msg), view_index(view), point_index(point) {}
  int view_index;
  int point_index;
};

// Input geometry cannot constrain the requested estimate (rank deficiency,
// duplicated views, degenerate motion).
struct DegenerateConfiguration : Error {
  using Error::Error;
};

struct SingularIntrinsics : Error {
  using Error::Error;
};

struct SingularHomography : Error {
  using Error::Error;
};

struct TooFewViews : Error {
  using Error::Error;
};

struct TooFewPoints : Error {
  using Error::Error;
};

// The fixed homography gauge (unit Frobenius norm, positive (3,3) entry)
// cannot be established or was found violated.
struct GaugeViolation : Error {
  using Error::Error;
};

struct NoRealRoot : Error {
  using Error::Error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};

// Estimated quantities are inconsistent with the spherical model beyond
// numerical tolerance (e.g. negative squared radius).
struct NotConsistent : Error {
  using Error::Error;
};

struct DivergenceDetected : Error {
  using Error::Error;
};

struct InvalidInitialization : Error {
  using Error::Error;
};

struct SamplingExhausted : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

}  // namespace spherecal

#endif  // SPHERECAL_ERROR_HPP
