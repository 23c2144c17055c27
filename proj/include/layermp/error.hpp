#pragma once

#include <stdexcept>
#include <string>

namespace layermp {

//! Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define LAYERMP_ERROR(Name)               \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

LAYERMP_ERROR(InvalidMedium);
LAYERMP_ERROR(PointOnInterface);
LAYERMP_ERROR(LayerMismatch);
LAYERMP_ERROR(ComponentAbsent);
LAYERMP_ERROR(IndexOutOfRange);
LAYERMP_ERROR(InvalidSpectralArgument);
LAYERMP_ERROR(DegenerateDenominator);
LAYERMP_ERROR(LemmaViolation);
LAYERMP_ERROR(DomainError);
LAYERMP_ERROR(Overflow);
LAYERMP_ERROR(ChargeOutsideBox);
LAYERMP_ERROR(ChargeInsideBox);
LAYERMP_ERROR(CenterOnWrongSide);
LAYERMP_ERROR(BoxesNotSeparated);
LAYERMP_ERROR(BoxCrossesInterface);
LAYERMP_ERROR(ImaginaryResidue);
LAYERMP_ERROR(ConfigError);

#undef LAYERMP_ERROR

//! Adaptive quadrature could not reach the requested tolerance.
class ToleranceNotMet : public Error {
 public:
  ToleranceNotMet(const std::string& what, double achieved)
      : Error(what + " (achieved estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

}  // namespace layermp
