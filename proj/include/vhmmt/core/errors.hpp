#pragma once

#include <stdexcept>
#include <string>

namespace vhmmt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define VHMMT_DEFINE_ERROR(Name)                                        \
    class Name : public Error {                                         \
    public:                                                             \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

VHMMT_DEFINE_ERROR(DegenerateObservations);
VHMMT_DEFINE_ERROR(EmptySolutionSet);
VHMMT_DEFINE_ERROR(GoalOutOfLimits);
VHMMT_DEFINE_ERROR(EmptyCloud);
VHMMT_DEFINE_ERROR(DegenerateNeighborhood);
VHMMT_DEFINE_ERROR(CorruptFrame);
VHMMT_DEFINE_ERROR(UnknownKind);
VHMMT_DEFINE_ERROR(TruncatedFrame);
VHMMT_DEFINE_ERROR(Timeout);
VHMMT_DEFINE_ERROR(InvalidFit);
VHMMT_DEFINE_ERROR(NoValidFrames);
VHMMT_DEFINE_ERROR(InsufficientSamples);
VHMMT_DEFINE_ERROR(ConfigError);
VHMMT_DEFINE_ERROR(SimulationDiverged);
VHMMT_DEFINE_ERROR(BindError);
VHMMT_DEFINE_ERROR(ProtocolViolation);

#undef VHMMT_DEFINE_ERROR

} // namespace vhmmt
