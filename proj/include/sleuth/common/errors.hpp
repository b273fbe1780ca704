#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sleuth {

enum class ErrorKind {
    Precondition,
    NotFound,
    Auth,
    Transport,
    NoCaptions,
    MalformedTrack,
    CommentsDisabled,
    Llm,
    SchemaViolation,
    EmptyTranscript,
    QuotaExceeded,
    AllRetrieversFailed,
    MissingFrontMatter,
    Parse,
    PolicyViolation,
    PlatformRejection,
    Sizing,
    IllegalTransition,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every error the library throws. `kind()` is what run records and
/// the HTTP layer report; the concrete type is what callers catch.
class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

  private:
    ErrorKind kind_;
};

#define SLEUTH_SIMPLE_ERROR(Name, Kind)                                       \
    class Name : public Error {                                               \
      public:                                                                 \
        explicit Name(const std::string& message) : Error(ErrorKind::Kind, message) {} \
    }

SLEUTH_SIMPLE_ERROR(PreconditionError, Precondition);
SLEUTH_SIMPLE_ERROR(NotFound, NotFound);
SLEUTH_SIMPLE_ERROR(AuthError, Auth);
SLEUTH_SIMPLE_ERROR(TransportError, Transport);
SLEUTH_SIMPLE_ERROR(NoCaptions, NoCaptions);
SLEUTH_SIMPLE_ERROR(CommentsDisabled, CommentsDisabled);
SLEUTH_SIMPLE_ERROR(LlmError, Llm);
SLEUTH_SIMPLE_ERROR(EmptyTranscript, EmptyTranscript);
SLEUTH_SIMPLE_ERROR(QuotaExceeded, QuotaExceeded);
SLEUTH_SIMPLE_ERROR(AllRetrieversFailed, AllRetrieversFailed);
SLEUTH_SIMPLE_ERROR(PolicyViolation, PolicyViolation);
SLEUTH_SIMPLE_ERROR(SizingError, Sizing);
SLEUTH_SIMPLE_ERROR(IllegalTransition, IllegalTransition);
SLEUTH_SIMPLE_ERROR(IoError, Io);

#undef SLEUTH_SIMPLE_ERROR

class MalformedTrack : public Error {
  public:
    MalformedTrack(const std::string& message, std::size_t line, std::size_t offset);

    [[nodiscard]] std::size_t line() const noexcept { return line_; }
    [[nodiscard]] std::size_t offset() const noexcept { return offset_; }

  private:
    std::size_t line_;
    std::size_t offset_;
};

/// A structured document failed validation. `path()` names the first
/// failing location, e.g. `claims[2].questions[0]`.
class SchemaViolation : public Error {
  public:
    SchemaViolation(std::string path, const std::string& message);

    [[nodiscard]] const std::string& path() const noexcept { return path_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

  private:
    std::string path_;
    std::string detail_;
};

class ParseError : public Error {
  public:
    ParseError(const std::string& message, std::size_t line);

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

class MissingFrontMatter : public Error {
  public:
    MissingFrontMatter(std::string file, const std::string& message);

    [[nodiscard]] const std::string& file() const noexcept { return file_; }

  private:
    std::string file_;
};

class PlatformRejection : public Error {
  public:
    PlatformRejection(int status, const std::string& platform_message);

    [[nodiscard]] int status() const noexcept { return status_; }

  private:
    int status_;
};

}  // namespace sleuth
