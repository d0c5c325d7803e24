#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace naf {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input: duplicate labels, bad normalization, unparsable files.
class InvalidInput : public Error {
public:
    using Error::Error;
};

// Combination weights sum to zero: the sources share no support, so no
// finite-threshold protected model exists for this context.
class NoOverlap : public Error {
public:
    using Error::Error;
};

// A copyright tag appears in more datapoints than the shard plan allows.
class MultiplicityViolation : public Error {
public:
    MultiplicityViolation(const std::string& tag, int count, int m)
        : Error("tag \"" + tag + "\" appears in " + std::to_string(count) +
                " datapoints but the plan allows at most " + std::to_string(m) +
                "; deduplicate the dataset or raise m"),
          tag_(tag) {}
    const std::string& tag() const { return tag_; }

private:
    std::string tag_;
};

// The sequence space exceeds the enumeration cap.
class EnumerationInfeasible : public Error {
public:
    using Error::Error;
};

// A rejection sampler ran out of attempts (acceptance probability too small).
class Exhaustion : public Error {
public:
    explicit Exhaustion(std::uint64_t attempts)
        : Error("rejection sampling exhausted after " + std::to_string(attempts) +
                " attempts; acceptance probability is too small for this threshold"),
          attempts_(attempts) {}
    std::uint64_t attempts() const { return attempts_; }

private:
    std::uint64_t attempts_;
};

// A bound is undefined for the given inputs (e.g. acceptance probability 0).
class UndefinedBound : public Error {
public:
    using Error::Error;
};

}  // namespace naf
