#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ubisim {

enum class ErrorCode : std::uint8_t {
  UnknownService,
  DeviceUnavailable,
  PastEvent,
  Unreachable,
  SenderDepleted,
  MissingCapacity,
  UnknownNode,
  StaleView,
  TargetUnavailable,
  DuplicateNode,
  DanglingEdge,
  NegativeValue,
  MalformedLine,
  InvalidSetting,
  Io,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::UnknownService: return "UnknownService";
    case ErrorCode::DeviceUnavailable: return "DeviceUnavailable";
    case ErrorCode::PastEvent: return "PastEvent";
    case ErrorCode::Unreachable: return "Unreachable";
    case ErrorCode::SenderDepleted: return "SenderDepleted";
    case ErrorCode::MissingCapacity: return "MissingCapacity";
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::StaleView: return "StaleView";
    case ErrorCode::TargetUnavailable: return "TargetUnavailable";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::DanglingEdge: return "DanglingEdge";
    case ErrorCode::NegativeValue: return "NegativeValue";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::InvalidSetting: return "InvalidSetting";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

// Every failure raised by the library. `line` is set for scenario parse
// errors (1-based), zero otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::size_t line = 0)
      : std::runtime_error(format(code, message, line)), code_(code), line_(line) {}

  ErrorCode code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(ErrorCode code, const std::string& message, std::size_t line) {
    std::string out(to_string(code));
    if (line != 0) {
      out += ": line " + std::to_string(line);
    }
    out += ": " + message;
    return out;
  }

  ErrorCode code_;
  std::size_t line_;
};

}  // namespace ubisim
