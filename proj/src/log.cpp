#include "nmfalpha/log.hpp"

#include <iostream>
#include <mutex>

namespace nmfa {

namespace {

std::mutex g_sink_mutex;
WarningSink g_sink;

}  // namespace

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(g_sink_mutex);
  if (g_sink) {
    g_sink(message);
  } else {
    std::clog << "warning: " << message << '\n';
  }
}

WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard<std::mutex> lock(g_sink_mutex);
  WarningSink previous = std::move(g_sink);
  g_sink = std::move(sink);
  return previous;
}

}  // namespace nmfa
