#pragma once

#include <stdexcept>

namespace rftforge {

// Base class for all domain errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// action parsing / grounding
struct MalformedAction : Error { using Error::Error; };
struct UnknownActionType : Error { using Error::Error; };
struct MissingField : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };

// screens
struct ScreenTooLarge : Error { using Error::Error; };

// environment
struct UnknownTemplate : Error { using Error::Error; };
struct SessionClosed : Error { using Error::Error; };

// broker
struct DuplicateTicket : Error { using Error::Error; };
struct UnknownTicket : Error { using Error::Error; };
struct PolicyUnavailable : Error { using Error::Error; };
struct MalformedRequest : Error { using Error::Error; };
struct BrokerIoError : Error { using Error::Error; };

// policy models
struct NonpositiveWeight : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };
struct CorruptModel : Error { using Error::Error; };

// datasets
struct EmptyStore : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct EmptySplit : Error { using Error::Error; };

}  // namespace rftforge
