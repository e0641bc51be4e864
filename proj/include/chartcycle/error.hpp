#pragma once

#include <stdexcept>
#include <string>

namespace chartcycle {

enum class ErrorCode {
  syntax,
  unsupported_spec,
  schema,
  ragged_row,
  empty_input,
  missing_field,
  type_mismatch,
  empty_result,
  channel_collision,
  renderer_unavailable,
  timeout,
  dimension_mismatch,
  evaluation,
  embedder_unavailable,
  no_applicable_template,
  template_mismatch,
  transport,
  rate_limited,
  empty_response,
  config,
};

const char* to_string(ErrorCode code) noexcept;

/// Base of every error raised by the toolkit. The code is what callers
/// branch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define CHARTCYCLE_DEFINE_ERROR(Name, Code)                              \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(Code, message) {} \
  };

CHARTCYCLE_DEFINE_ERROR(SyntaxError, ErrorCode::syntax)
CHARTCYCLE_DEFINE_ERROR(UnsupportedSpec, ErrorCode::unsupported_spec)
CHARTCYCLE_DEFINE_ERROR(SchemaError, ErrorCode::schema)
CHARTCYCLE_DEFINE_ERROR(RaggedRow, ErrorCode::ragged_row)
CHARTCYCLE_DEFINE_ERROR(EmptyInput, ErrorCode::empty_input)
CHARTCYCLE_DEFINE_ERROR(MissingField, ErrorCode::missing_field)
CHARTCYCLE_DEFINE_ERROR(TypeMismatch, ErrorCode::type_mismatch)
CHARTCYCLE_DEFINE_ERROR(EmptyResult, ErrorCode::empty_result)
CHARTCYCLE_DEFINE_ERROR(ChannelCollision, ErrorCode::channel_collision)
CHARTCYCLE_DEFINE_ERROR(RendererUnavailable, ErrorCode::renderer_unavailable)
CHARTCYCLE_DEFINE_ERROR(Timeout, ErrorCode::timeout)
CHARTCYCLE_DEFINE_ERROR(DimensionMismatch, ErrorCode::dimension_mismatch)
CHARTCYCLE_DEFINE_ERROR(EvaluationError, ErrorCode::evaluation)
CHARTCYCLE_DEFINE_ERROR(EmbedderUnavailable, ErrorCode::embedder_unavailable)
CHARTCYCLE_DEFINE_ERROR(NoApplicableTemplate, ErrorCode::no_applicable_template)
CHARTCYCLE_DEFINE_ERROR(TemplateMismatch, ErrorCode::template_mismatch)
CHARTCYCLE_DEFINE_ERROR(TransportError, ErrorCode::transport)
CHARTCYCLE_DEFINE_ERROR(RateLimited, ErrorCode::rate_limited)
CHARTCYCLE_DEFINE_ERROR(EmptyResponse, ErrorCode::empty_response)
CHARTCYCLE_DEFINE_ERROR(ConfigError, ErrorCode::config)

#undef CHARTCYCLE_DEFINE_ERROR

}  // namespace chartcycle
