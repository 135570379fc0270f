// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace vidrefine {

/// Base of every error raised by the orchestrator.
///
/// `kind()` is the stable name recorded as a sample's failure reason, and
/// `retryable()` tells the retry loop whether another attempt may succeed.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message, bool retryable = false)
        : std::runtime_error(message), kind_(std::move(kind)), retryable_(retryable) {}

    const std::string& kind() const noexcept { return kind_; }
    bool retryable() const noexcept { return retryable_; }

private:
    std::string kind_;
    bool retryable_;
};

#define VIDREFINE_ERROR(Name, Retryable)                                     \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(#Name, message, Retryable) {} \
    };

VIDREFINE_ERROR(ValidationError, false)
VIDREFINE_ERROR(MissingPlaceholder, false)
VIDREFINE_ERROR(ModelRefusal, false)
VIDREFINE_ERROR(EmptyResponse, true)
VIDREFINE_ERROR(PromptTooLong, false)
VIDREFINE_ERROR(GenerationFailed, false)
VIDREFINE_ERROR(ScoreUnavailable, false)
VIDREFINE_ERROR(UnscorableSample, false)
VIDREFINE_ERROR(CorruptManifest, false)
VIDREFINE_ERROR(CollisionError, false)
VIDREFINE_ERROR(IoError, false)

#undef VIDREFINE_ERROR

/// Network-level failure. Connection errors, timeouts, 5xx, 408 and 429 are
/// retryable; other HTTP statuses are not.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& message, bool retryable = true)
        : Error("TransportError", message, retryable) {}
};

}  // namespace vidrefine
