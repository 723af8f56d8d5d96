#pragma once

#include <stdexcept>

namespace risloc {

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NoValidPartition : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateGeometry : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidWindow : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct UnbalancedSchedule : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ZeroOperand : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ZeroChannelEntry : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SingularFim : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteObjective : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyWindow : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace risloc
