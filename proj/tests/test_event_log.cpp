#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "spikenn/event_log.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <zlib.h>

using namespace spikenn;
namespace fs = std::filesystem;

namespace {

std::vector<SpikeEvent> sample_events() {
  std::vector<SpikeEvent> events;
  events.push_back({-1, 3, +1, Phase::kForward});
  events.push_back({0, 17, +1, Phase::kForward});
  events.push_back({0, 2, -1, Phase::kResidualForward});
  events.push_back({2, 5, -1, Phase::kBackward});
  events.push_back({1, 0, +1, Phase::kResidualBackward});
  return events;
}

constexpr const char* kExpected =
    "forward,-1,3,+1\n"
    "forward,0,17,+1\n"
    "residual_forward,0,2,-1\n"
    "backward,2,5,-1\n"
    "residual_backward,1,0,+1\n";

fs::path fresh_dir() {
  const fs::path dir =
      fs::temp_directory_path() / ("spikenn_log_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("plain text log, one line per event") {
  const fs::path path = fresh_dir() / "events.csv";
  write_event_log(sample_events(), path.string(), false);
  CHECK(slurp(path) == kExpected);
}

TEST_CASE("gzip log carries the same bytes behind a gzip header") {
  const fs::path path = fresh_dir() / "events.csv.gz";
  write_event_log(sample_events(), path.string(), true);

  const std::string raw = slurp(path);
  REQUIRE(raw.size() >= 2);
  CHECK(static_cast<unsigned char>(raw[0]) == 0x1f);
  CHECK(static_cast<unsigned char>(raw[1]) == 0x8b);

  gzFile gz = gzopen(path.string().c_str(), "rb");
  REQUIRE(gz != nullptr);
  std::string inflated;
  char buf[4096];
  int n = 0;
  while ((n = gzread(gz, buf, sizeof(buf))) > 0) inflated.append(buf, n);
  gzclose(gz);
  CHECK(inflated == kExpected);
}

TEST_CASE("unwritable path reports an io error") {
  CHECK_THROWS_AS(
      write_event_log(sample_events(), "/nonexistent/dir/events.csv", false),
      IoError);
  CHECK_THROWS_AS(
      write_event_log(sample_events(), "/nonexistent/dir/events.csv.gz", true),
      IoError);
}
