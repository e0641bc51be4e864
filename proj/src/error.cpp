#include "chartcycle/error.hpp"

namespace chartcycle {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::syntax: return "SyntaxError";
    case ErrorCode::unsupported_spec: return "UnsupportedSpec";
    case ErrorCode::schema: return "SchemaError";
    case ErrorCode::ragged_row: return "RaggedRow";
    case ErrorCode::empty_input: return "EmptyInput";
    case ErrorCode::missing_field: return "MissingField";
    case ErrorCode::type_mismatch: return "TypeMismatch";
    case ErrorCode::empty_result: return "EmptyResult";
    case ErrorCode::channel_collision: return "ChannelCollision";
    case ErrorCode::renderer_unavailable: return "RendererUnavailable";
    case ErrorCode::timeout: return "Timeout";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::evaluation: return "EvaluationError";
    case ErrorCode::embedder_unavailable: return "EmbedderUnavailable";
    case ErrorCode::no_applicable_template: return "NoApplicableTemplate";
    case ErrorCode::template_mismatch: return "TemplateMismatch";
    case ErrorCode::transport: return "Transport";
    case ErrorCode::rate_limited: return "RateLimited";
    case ErrorCode::empty_response: return "EmptyResponse";
    case ErrorCode::config: return "ConfigError";
  }
  return "Error";
}

}  // namespace chartcycle
