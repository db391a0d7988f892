#include "noisyuat/log.hpp"

#include <iostream>
#include <mutex>

namespace noisyuat {
namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

void default_sink(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

WarningSink& sink() {
  static WarningSink s = default_sink;
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = s ? std::move(s) : WarningSink(default_sink);
}

void warn(const std::string& message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

}  // namespace noisyuat
