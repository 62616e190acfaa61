#pragma once

#include <stdexcept>
#include <string>

namespace srb {

/// Base class for all domain errors raised by the lab. `name()` is the
/// machine-readable identifier that ends up in run manifests.
class Error : public std::runtime_error {
  public:
    Error(std::string name, const std::string& what)
        : std::runtime_error(what), name_(std::move(name)) {}

    const std::string& name() const { return name_; }

  private:
    std::string name_;
};

#define SRB_DEFINE_ERROR(NAME)                                                \
    class NAME : public Error {                                               \
      public:                                                                 \
        explicit NAME(const std::string& what = #NAME)                        \
            : Error(#NAME, what) {}                                           \
    }

SRB_DEFINE_ERROR(SingularInput);
SRB_DEFINE_ERROR(BoundaryInput);
SRB_DEFINE_ERROR(NotSingularSystem);
SRB_DEFINE_ERROR(ParameterOutOfRange);
SRB_DEFINE_ERROR(OrbitHalted);
SRB_DEFINE_ERROR(NoDominantDirection);
SRB_DEFINE_ERROR(ZeroVector);
SRB_DEFINE_ERROR(EmptyEnsemble);
SRB_DEFINE_ERROR(EmptySample);
SRB_DEFINE_ERROR(DegenerateEnsemble);
SRB_DEFINE_ERROR(GridMismatch);
SRB_DEFINE_ERROR(InvalidLeaf);
SRB_DEFINE_ERROR(LeafConstructionFailed);
SRB_DEFINE_ERROR(HistoryTooShort);
SRB_DEFINE_ERROR(NoContraction);
SRB_DEFINE_ERROR(InsufficientMass);
SRB_DEFINE_ERROR(InverseUnavailable);
SRB_DEFINE_ERROR(AllMassZero);

#undef SRB_DEFINE_ERROR

} // namespace srb
