#pragma once

// Bridge to an external chart renderer. The renderer receives one spec
// document with inline data and answers with a PNG or a failure class.

#include "chartcycle/table.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace chartcycle {

enum class RenderStatus { ok, compile_error, runtime_error };

std::string_view to_string(RenderStatus s) noexcept;

struct RenderResult {
  RenderStatus status = RenderStatus::runtime_error;
  std::string png;     // set iff ok
  std::string reason;  // renderer diagnostics on failure

  bool ok() const noexcept { return status == RenderStatus::ok; }
};

struct RenderOptions {
  double scale = 2.0;
  std::chrono::milliseconds timeout{30000};
};

class Renderer {
 public:
  virtual ~Renderer() = default;
  /// `document` is a complete spec with `data.values` inlined.
  /// Throws RendererUnavailable, Timeout.
  virtual RenderResult render_document(const std::string& document, const RenderOptions& options) = 0;
  virtual std::string describe() const = 0;
};

/// Spawns `argv` per chart, spec on stdin, PNG on stdout. Exit status 0 is
/// success, 2 a compile error, anything else a runtime error. The token
/// "{scale}" in any argument is replaced by the scale.
class SubprocessRenderer final : public Renderer {
 public:
  explicit SubprocessRenderer(std::vector<std::string> argv);
  RenderResult render_document(const std::string& document, const RenderOptions& options) override;
  std::string describe() const override;

 private:
  std::vector<std::string> argv_;
};

/// POSTs the document to `url` (query parameter scale). 200 carries the
/// PNG, 400 and 422 are compile errors, other statuses runtime errors.
class HttpRenderer final : public Renderer {
 public:
  explicit HttpRenderer(std::string url);
  RenderResult render_document(const std::string& document, const RenderOptions& options) override;
  std::string describe() const override;

 private:
  std::string url_;
};

/// Inlines `data` into the spec text as `data.values`, replacing any data
/// block. Throws SyntaxError when spec_text is not a JSON object.
std::string inline_data(std::string_view spec_text, const Table& data);

/// Counting semaphore bounding concurrent renderer invocations.
class Semaphore {
 public:
  explicit Semaphore(std::size_t count) : count_(count == 0 ? 1 : count) {}
  void acquire();
  void release();

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t count_;
};

/// Caching front end over a Renderer. Thread-safe; results are keyed by the
/// hash of (document, scale), so identical inputs never spawn twice.
class RenderBridge {
 public:
  RenderBridge(std::shared_ptr<Renderer> renderer, RenderOptions options = {}, std::size_t width = 4);

  /// Malformed JSON is a compile error without invoking the renderer.
  /// Throws RendererUnavailable, Timeout.
  RenderResult render(std::string_view spec_text, const Table& data);
  /// True iff render succeeds; timeouts count as failures.
  bool probe_validity(std::string_view spec_text, const Table& data);

  std::size_t invocations() const noexcept { return invocations_.load(); }
  const RenderOptions& options() const noexcept { return options_; }
  std::string describe() const { return renderer_->describe(); }

 private:
  std::shared_ptr<Renderer> renderer_;
  RenderOptions options_;
  Semaphore slots_;
  std::shared_mutex cache_mutex_;
  std::unordered_map<std::string, RenderResult> cache_;
  std::atomic<std::size_t> invocations_{0};
};

}  // namespace chartcycle
