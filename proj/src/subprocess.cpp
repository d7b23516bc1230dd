#include "drpipe/subprocess.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstring>

#include "drpipe/error.hpp"

namespace drpipe {

Subprocess::Subprocess(const std::string& command) {
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw Error("pipe() failed: " + std::string(std::strerror(errno)));

  pid_ = fork();
  if (pid_ < 0) throw Error("fork() failed: " + std::string(std::strerror(errno)));

  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }

  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  signal(SIGPIPE, SIG_IGN);  // broken pipe surfaces as a write error instead
}

Subprocess::~Subprocess() {
  if (pid_ >= 0) {
    try {
      close();
    } catch (...) {
    }
  }
}

void Subprocess::write_all(const void* data, std::size_t len) {
  const char* p = static_cast<const char*>(data);
  while (len > 0) {
    const ssize_t n = ::write(to_child_, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to runner failed: " + std::string(std::strerror(errno)));
    }
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

void Subprocess::write_line(const std::string& line) {
  std::string with_nl = line + "\n";
  write_all(with_nl.data(), with_nl.size());
}

void Subprocess::read_all(void* data, std::size_t len) {
  char* p = static_cast<char*>(data);
  while (len > 0) {
    const ssize_t n = ::read(from_child_, p, len);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("read from runner failed: " + std::string(std::strerror(errno)));
    }
    if (n == 0) throw Error("runner closed its output unexpectedly");
    p += n;
    len -= static_cast<std::size_t>(n);
  }
}

std::string Subprocess::read_line() {
  std::string line;
  char c;
  for (;;) {
    read_all(&c, 1);
    if (c == '\n') return line;
    line += c;
  }
}

int Subprocess::close() {
  if (pid_ < 0) return 0;
  if (to_child_ >= 0) {
    ::close(to_child_);
    to_child_ = -1;
  }
  int status = 0;
  waitpid(pid_, &status, 0);
  pid_ = -1;
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace drpipe
