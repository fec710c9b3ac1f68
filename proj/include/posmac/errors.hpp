#pragma once

#include <stdexcept>

namespace posmac {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// pcap container
struct BadMagic : Error { using Error::Error; };
struct TruncatedRecord : Error { using Error::Error; };
struct UnsupportedLinkType : Error { using Error::Error; };

// traffic synthesis / replay
struct InvalidProfile : Error { using Error::Error; };
struct UnsortedInput : Error { using Error::Error; };

// model training / envelope
struct EmptyDataset : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct UnsupportedFormatVersion : Error { using Error::Error; };
struct CorruptNodeTable : Error { using Error::Error; };

// serving
struct StaleVersion : Error { using Error::Error; };
struct NotStarted : Error { using Error::Error; };

// harness
struct ConfigError : Error { using Error::Error; };

}  // namespace posmac
