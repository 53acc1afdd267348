#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace storyboard {

struct ProcessResult {
    int exit_code = -1;
    std::string stdout_text;
    std::string stderr_text;
};

/// Runs argv[0] (PATH lookup) to completion, capturing both output streams.
/// Throws SubprocessError if the executable cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv);

/// A long-lived child with line-oriented stdin/stdout pipes. stderr is
/// inherited. The destructor closes stdin and reaps the child.
class ChildProcess {
public:
    explicit ChildProcess(const std::vector<std::string>& argv);
    ~ChildProcess();
    ChildProcess(const ChildProcess&) = delete;
    ChildProcess& operator=(const ChildProcess&) = delete;

    /// Writes `line` plus '\n'. Throws TransportError if the pipe is closed.
    void write_line(const std::string& line);
    /// Blocks up to `timeout` for one full line (without the '\n').
    /// Throws TimeoutError on expiry and TransportError on EOF.
    std::string read_line(std::chrono::duration<double> timeout);

    int pid() const noexcept { return pid_; }

private:
    int pid_ = -1;
    int in_fd_ = -1;
    int out_fd_ = -1;
    std::string buffer_;
};

}  // namespace storyboard
