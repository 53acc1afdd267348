#include "storyboard/subprocess.hpp"

#include "storyboard/error.hpp"

#include <csignal>
#include <cerrno>
#include <cstring>
#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace storyboard {

namespace {

struct Pipe {
    int read = -1;
    int write = -1;
    Pipe() {
        int fds[2];
        if (::pipe2(fds, O_CLOEXEC) != 0) throw IoError(std::string("pipe: ") + std::strerror(errno));
        read = fds[0];
        write = fds[1];
    }
};

void close_fd(int& fd) {
    if (fd >= 0) ::close(fd);
    fd = -1;
}

std::vector<char*> make_argv(const std::vector<std::string>& argv) {
    std::vector<char*> out;
    for (const auto& a : argv) out.push_back(const_cast<char*>(a.c_str()));
    out.push_back(nullptr);
    return out;
}

int spawn(const std::vector<std::string>& argv, int child_in, int child_out, int child_err) {
    if (argv.empty()) throw InvalidArgument("empty command");
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    if (child_in >= 0) posix_spawn_file_actions_adddup2(&actions, child_in, STDIN_FILENO);
    if (child_out >= 0) posix_spawn_file_actions_adddup2(&actions, child_out, STDOUT_FILENO);
    if (child_err >= 0) posix_spawn_file_actions_adddup2(&actions, child_err, STDERR_FILENO);
    auto args = make_argv(argv);
    pid_t pid = -1;
    const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0)
        throw SubprocessError("cannot start " + argv[0] + ": " + std::strerror(rc), -1, "");
    return pid;
}

int wait_exit(int pid) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) return -1;
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv) {
    Pipe out, err;
    const int pid = spawn(argv, -1, out.write, err.write);
    close_fd(out.write);
    close_fd(err.write);

    ProcessResult result;
    pollfd fds[2] = {{out.read, POLLIN, 0}, {err.read, POLLIN, 0}};
    std::string* sinks[2] = {&result.stdout_text, &result.stderr_text};
    int open = 2;
    char buf[4096];
    while (open > 0) {
        if (::poll(fds, 2, -1) < 0) {
            if (errno == EINTR) continue;
            break;
        }
        for (int k = 0; k < 2; ++k) {
            if (fds[k].fd < 0 || !(fds[k].revents & (POLLIN | POLLHUP | POLLERR))) continue;
            const ssize_t n = ::read(fds[k].fd, buf, sizeof buf);
            if (n > 0) {
                sinks[k]->append(buf, static_cast<std::size_t>(n));
            } else if (n == 0 || errno != EINTR) {
                ::close(fds[k].fd);
                fds[k].fd = -1;
                --open;
            }
        }
    }
    result.exit_code = wait_exit(pid);
    return result;
}

ChildProcess::ChildProcess(const std::vector<std::string>& argv) {
    // a dead provider must surface as TransportError, not kill the host
    std::signal(SIGPIPE, SIG_IGN);
    Pipe to_child, from_child;
    pid_ = spawn(argv, to_child.read, from_child.write, -1);
    ::close(to_child.read);
    ::close(from_child.write);
    in_fd_ = to_child.write;
    out_fd_ = from_child.read;
}

ChildProcess::~ChildProcess() {
    close_fd(in_fd_);
    close_fd(out_fd_);
    if (pid_ > 0) {
        // give a well-behaved provider a moment to exit on EOF
        for (int i = 0; i < 50; ++i) {
            int status;
            if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
            ::usleep(2000);
        }
        ::kill(pid_, SIGKILL);
        wait_exit(pid_);
    }
}

void ChildProcess::write_line(const std::string& line) {
    std::string data = line + '\n';
    std::size_t off = 0;
    while (off < data.size()) {
        const ssize_t n = ::write(in_fd_, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("provider stdin closed: ") + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
}

std::string ChildProcess::read_line(std::chrono::duration<double> timeout) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + std::chrono::duration_cast<clock::duration>(timeout);
    char buf[4096];
    for (;;) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
        if (remaining.count() <= 0) throw TimeoutError("provider response timed out");
        pollfd pfd{out_fd_, POLLIN, 0};
        const int rc = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(1, remaining.count())));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("poll: ") + std::strerror(errno));
        }
        if (rc == 0) continue;
        const ssize_t n = ::read(out_fd_, buf, sizeof buf);
        if (n == 0) throw TransportError("provider closed its output");
        if (n < 0) {
            if (errno == EINTR) continue;
            throw TransportError(std::string("read: ") + std::strerror(errno));
        }
        buffer_.append(buf, static_cast<std::size_t>(n));
    }
}

}  // namespace storyboard
