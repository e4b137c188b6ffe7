#pragma once

#include <stdexcept>
#include <string>

namespace mixq {

// Base class for every error raised by the library. CLI maps these to
// exit code 2 (bad input / infeasible), verification mismatches to 1.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ShapeMismatch : Error {
    using Error::Error;
};
struct ScalarTooWide : Error {
    using Error::Error;
};
struct ShiftOutOfRange : Error {
    using Error::Error;
};
struct LaneOutOfRange : Error {
    using Error::Error;
};

struct SlotOverflow : Error {
    using Error::Error;
};
struct WordOverflow : Error {
    using Error::Error;
};
struct NoFeasiblePlan : Error {
    using Error::Error;
};
struct PlanMismatch : Error {
    using Error::Error;
};
struct InfeasiblePlan : Error {
    using Error::Error;
};
struct FieldOverflow : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};
struct DimMismatch : Error {
    using Error::Error;
};

struct DegenerateSystem : Error {
    using Error::Error;
};

struct IncompleteTable : Error {
    using Error::Error;
};
struct Infeasible : Error {
    using Error::Error;
};

}  // namespace mixq
