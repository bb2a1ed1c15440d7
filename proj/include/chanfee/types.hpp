#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace chanfee {

// All monetary quantities are integer millisatoshi.
using Msat = std::int64_t;
using NodeId = std::string;
using NodeIndex = std::uint32_t;
using ChannelIndex = std::uint32_t;

inline constexpr Msat kMsatPerSat = 1000;
inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();
inline constexpr ChannelIndex kNoChannel = std::numeric_limits<ChannelIndex>::max();

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MalformedRecord : public Error {
public:
    MalformedRecord(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class EmptySnapshot : public Error {
public:
    EmptySnapshot() : Error("snapshot contains no channel records") {}
};

class MalformedLine : public Error {
public:
    MalformedLine(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ManualSumMismatch : public Error {
public:
    using Error::Error;
};

class UnknownCenter : public Error {
public:
    explicit UnknownCenter(const NodeId& id) : Error("unknown center node '" + id + "'") {}
};

class NodeHasNoChannels : public Error {
public:
    explicit NodeHasNoChannels(const NodeId& id) : Error("node '" + id + "' has no channels") {}
};

class NoEligibleReceiver : public Error {
public:
    NoEligibleReceiver() : Error("graph has fewer than two nodes; no receiver can be drawn") {}
};

class StaleRoute : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InvalidConfig : public Error {
public:
    using Error::Error;
};

}  // namespace chanfee
