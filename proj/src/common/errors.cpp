#include "sleuth/common/errors.hpp"

#include <fmt/format.h>

namespace sleuth {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Precondition: return "PreconditionViolation";
        case ErrorKind::NotFound: return "NotFound";
        case ErrorKind::Auth: return "AuthError";
        case ErrorKind::Transport: return "TransportError";
        case ErrorKind::NoCaptions: return "NoCaptions";
        case ErrorKind::MalformedTrack: return "MalformedTrack";
        case ErrorKind::CommentsDisabled: return "CommentsDisabled";
        case ErrorKind::Llm: return "LlmError";
        case ErrorKind::SchemaViolation: return "SchemaViolation";
        case ErrorKind::EmptyTranscript: return "EmptyTranscript";
        case ErrorKind::QuotaExceeded: return "QuotaExceeded";
        case ErrorKind::AllRetrieversFailed: return "AllRetrieversFailed";
        case ErrorKind::MissingFrontMatter: return "MissingFrontMatter";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::PolicyViolation: return "PolicyViolation";
        case ErrorKind::PlatformRejection: return "PlatformRejection";
        case ErrorKind::Sizing: return "SizingError";
        case ErrorKind::IllegalTransition: return "IllegalTransition";
        case ErrorKind::Io: return "IoError";
    }
    return "Unknown";
}

MalformedTrack::MalformedTrack(const std::string& message, std::size_t line, std::size_t offset)
    : Error(ErrorKind::MalformedTrack,
            fmt::format("malformed caption track at line {} (offset {}): {}", line, offset, message)),
      line_(line),
      offset_(offset) {}

SchemaViolation::SchemaViolation(std::string path, const std::string& message)
    : Error(ErrorKind::SchemaViolation, fmt::format("schema violation at {}: {}", path, message)),
      path_(std::move(path)),
      detail_(message) {}

ParseError::ParseError(const std::string& message, std::size_t line)
    : Error(ErrorKind::Parse, fmt::format("parse error at line {}: {}", line, message)), line_(line) {}

MissingFrontMatter::MissingFrontMatter(std::string file, const std::string& message)
    : Error(ErrorKind::MissingFrontMatter, fmt::format("{}: {}", file, message)), file_(std::move(file)) {}

PlatformRejection::PlatformRejection(int status, const std::string& platform_message)
    : Error(ErrorKind::PlatformRejection,
            fmt::format("platform rejected request ({}): {}", status, platform_message)),
      status_(status) {}

}  // namespace sleuth
