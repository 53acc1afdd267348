#include "storyboard/error.hpp"

#include <iostream>
#include <mutex>

namespace storyboard {

void log_warning(const std::string& message) {
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    std::clog << "[storyboard] warning: " << message << '\n';
}

}  // namespace storyboard
