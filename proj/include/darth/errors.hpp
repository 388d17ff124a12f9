#pragma once

#include <stdexcept>
#include <string>

namespace darth {

/// Base class for every error raised by the simulator.
class SimError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define DARTH_DEFINE_ERROR(Name)                                   \
    class Name : public SimError {                                 \
    public:                                                        \
        explicit Name(const std::string& what) : SimError(what) {} \
    }

DARTH_DEFINE_ERROR(OverflowError);
DARTH_DEFINE_ERROR(PlanMismatchError);
DARTH_DEFINE_ERROR(ColumnConflictError);
DARTH_DEFINE_ERROR(ReservedRegisterError);
DARTH_DEFINE_ERROR(AlreadyReservedError);
DARTH_DEFINE_ERROR(AddressRangeError);
DARTH_DEFINE_ERROR(CapacityError);
DARTH_DEFINE_ERROR(RangeError);
DARTH_DEFINE_ERROR(ParityError);
DARTH_DEFINE_ERROR(WidthConflictError);
DARTH_DEFINE_ERROR(ArbiterConflictError);
DARTH_DEFINE_ERROR(ShapeError);
DARTH_DEFINE_ERROR(IndexError);
DARTH_DEFINE_ERROR(ModeError);
DARTH_DEFINE_ERROR(ConfigError);
DARTH_DEFINE_ERROR(BudgetError);
DARTH_DEFINE_ERROR(DirectionError);

#undef DARTH_DEFINE_ERROR

}  // namespace darth
