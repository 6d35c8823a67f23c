#include "rompc/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace rompc::log {

namespace {

Level parse_env() {
  const char* env = std::getenv("ROMPC_LOG");
  if (!env) return Level::Warn;
  if (std::strcmp(env, "error") == 0 || std::strcmp(env, "0") == 0) return Level::Error;
  if (std::strcmp(env, "warn") == 0 || std::strcmp(env, "1") == 0) return Level::Warn;
  if (std::strcmp(env, "info") == 0 || std::strcmp(env, "2") == 0) return Level::Info;
  if (std::strcmp(env, "debug") == 0 || std::strcmp(env, "3") == 0) return Level::Debug;
  return Level::Warn;
}

Level& current() {
  static Level lvl = parse_env();
  return lvl;
}

const char* tag(Level lvl) {
  switch (lvl) {
    case Level::Error: return "error";
    case Level::Warn: return "warn";
    case Level::Info: return "info";
    default: return "debug";
  }
}

}  // namespace

Level level() { return current(); }
void set_level(Level lvl) { current() = lvl; }

void write(Level lvl, const std::string& msg) {
  if (static_cast<int>(lvl) > static_cast<int>(current())) return;
  std::fprintf(stderr, "[rompc %s] %s\n", tag(lvl), msg.c_str());
}

}  // namespace rompc::log
