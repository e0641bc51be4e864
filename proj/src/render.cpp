#include "chartcycle/render.hpp"

#include "chartcycle/error.hpp"
#include "chartcycle/util.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

extern char** environ;

namespace chartcycle {

std::string_view to_string(RenderStatus s) noexcept {
  switch (s) {
    case RenderStatus::ok: return "ok";
    case RenderStatus::compile_error: return "compile_error";
    case RenderStatus::runtime_error: return "runtime_error";
  }
  return "?";
}

namespace {

std::string scale_text(double scale) {
  std::ostringstream os;
  os << scale;
  return os.str();
}

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw RendererUnavailable(std::string("pipe: ") + std::strerror(errno));
  read_end.fd = fds[0];
  write_end.fd = fds[1];
}

}  // namespace

SubprocessRenderer::SubprocessRenderer(std::vector<std::string> argv) : argv_(std::move(argv)) {
  if (argv_.empty()) throw ConfigError("renderer command is empty");
}

std::string SubprocessRenderer::describe() const {
  std::string out = "subprocess:";
  for (const auto& a : argv_) out += " " + a;
  return out;
}

RenderResult SubprocessRenderer::render_document(const std::string& document, const RenderOptions& options) {
  // A renderer that exits before reading stdin must not kill this process.
  static std::once_flag ignore_sigpipe;
  std::call_once(ignore_sigpipe, [] {
    struct sigaction current {};
    if (::sigaction(SIGPIPE, nullptr, &current) == 0 && current.sa_handler == SIG_DFL) ::signal(SIGPIPE, SIG_IGN);
  });
  std::vector<std::string> args;
  for (const auto& a : argv_) {
    std::string arg = a;
    for (std::size_t p; (p = arg.find("{scale}")) != std::string::npos;) arg.replace(p, 7, scale_text(options.scale));
    args.push_back(std::move(arg));
  }
  std::vector<char*> cargv;
  for (auto& a : args) cargv.push_back(a.data());
  cargv.push_back(nullptr);

  Fd in_r, in_w, out_r, out_w, err_r, err_w;
  make_pipe(in_r, in_w);
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_r.fd, 0);
  posix_spawn_file_actions_adddup2(&actions, out_w.fd, 1);
  posix_spawn_file_actions_adddup2(&actions, err_w.fd, 2);
  pid_t pid = 0;
  const int rc = ::posix_spawnp(&pid, cargv[0], &actions, nullptr, cargv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw RendererUnavailable("cannot start renderer '" + args[0] + "': " + std::strerror(rc));
  in_r.reset();
  out_w.reset();
  err_w.reset();

  ::fcntl(in_w.fd, F_SETFL, O_NONBLOCK);
  std::string out, err;
  std::size_t written = 0;
  if (document.empty()) in_w.reset();
  const auto deadline = std::chrono::steady_clock::now() + options.timeout;
  bool timed_out = false;
  char buf[65536];
  while (out_r.fd >= 0 || err_r.fd >= 0) {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd fds[3];
    int n = 0;
    int i_in = -1, i_out = -1, i_err = -1;
    if (in_w.fd >= 0) fds[i_in = n++] = {in_w.fd, POLLOUT, 0};
    if (out_r.fd >= 0) fds[i_out = n++] = {out_r.fd, POLLIN, 0};
    if (err_r.fd >= 0) fds[i_err = n++] = {err_r.fd, POLLIN, 0};
    const int ready = ::poll(fds, static_cast<nfds_t>(n), static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready < 0) break;
    if (i_in >= 0 && fds[i_in].revents) {
      if (fds[i_in].revents & (POLLERR | POLLHUP)) {
        in_w.reset();
      } else {
        const ssize_t w = ::write(in_w.fd, document.data() + written, document.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if (w < 0 && errno != EAGAIN) in_w.reset();
        if (written == document.size()) in_w.reset();
      }
    }
    auto drain = [&](int idx, Fd& fd, std::string& sink) {
      if (idx < 0 || !fds[idx].revents) return;
      const ssize_t r = ::read(fd.fd, buf, sizeof buf);
      if (r > 0) sink.append(buf, static_cast<std::size_t>(r));
      else if (r == 0 || errno != EINTR) fd.reset();
    };
    drain(i_out, out_r, out);
    drain(i_err, err_r, err);
  }
  if (timed_out) ::kill(pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) throw Timeout("renderer exceeded " + std::to_string(options.timeout.count()) + " ms");

  RenderResult result;
  result.reason = err;
  if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
    if (out.empty()) {
      result.status = RenderStatus::runtime_error;
      result.reason = "renderer produced no image";
    } else {
      result.status = RenderStatus::ok;
      result.png = std::move(out);
      result.reason.clear();
    }
  } else if (WIFEXITED(status) && WEXITSTATUS(status) == 127) {
    throw RendererUnavailable("renderer could not execute: " + err);
  } else if (WIFEXITED(status) && WEXITSTATUS(status) == 2) {
    result.status = RenderStatus::compile_error;
  } else {
    result.status = RenderStatus::runtime_error;
    if (WIFSIGNALED(status)) result.reason += "killed by signal " + std::to_string(WTERMSIG(status));
  }
  return result;
}

std::string inline_data(std::string_view spec_text, const Table& data) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(spec_text);
  } catch (const nlohmann::json::exception& e) {
    throw SyntaxError(e.what());
  }
  if (!doc.is_object()) throw SyntaxError("spec is not an object");
  doc["data"] = nlohmann::ordered_json{{"values", table_to_values(data)}};
  return doc.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

void Semaphore::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return count_ > 0; });
  --count_;
}

void Semaphore::release() {
  {
    std::lock_guard lock(mutex_);
    ++count_;
  }
  cv_.notify_one();
}

RenderBridge::RenderBridge(std::shared_ptr<Renderer> renderer, RenderOptions options, std::size_t width)
    : renderer_(std::move(renderer)), options_(options), slots_(width) {
  if (!renderer_) throw RendererUnavailable("no renderer configured");
}

RenderResult RenderBridge::render(std::string_view spec_text, const Table& data) {
  std::string document;
  try {
    document = inline_data(spec_text, data);
  } catch (const SyntaxError& e) {
    return RenderResult{RenderStatus::compile_error, {}, e.what()};
  }
  const std::string key = sha256_hex(document + "\n" + scale_text(options_.scale));
  {
    std::shared_lock lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  slots_.acquire();
  RenderResult result;
  try {
    ++invocations_;
    result = renderer_->render_document(document, options_);
  } catch (...) {
    slots_.release();
    throw;
  }
  slots_.release();
  std::unique_lock lock(cache_mutex_);
  return cache_.emplace(key, std::move(result)).first->second;
}

bool RenderBridge::probe_validity(std::string_view spec_text, const Table& data) {
  try {
    return render(spec_text, data).ok();
  } catch (const Timeout&) {
    return false;
  }
}

}  // namespace chartcycle
