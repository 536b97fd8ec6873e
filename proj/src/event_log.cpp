#include "spikenn/event_log.hpp"

#include "spikenn/types.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace spikenn {

void write_event_log(const std::vector<SpikeEvent>& events,
                     const std::string& path, bool gzip) {
  std::ostringstream text;
  for (const SpikeEvent& ev : events)
    text << to_string(ev.phase) << ',' << ev.layer << ',' << ev.neuron << ','
         << (ev.sign > 0 ? "+1" : "-1") << '\n';
  const std::string body = text.str();

  if (!gzip) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError("write failed for " + path);
    return;
  }

  gzFile gz = gzopen(path.c_str(), "wb");
  if (!gz) throw IoError("cannot write " + path);
  const int written =
      gzwrite(gz, body.data(), static_cast<unsigned>(body.size()));
  const int rc = gzclose(gz);
  if (written != static_cast<int>(body.size()) || rc != Z_OK)
    throw IoError("gzip write failed for " + path);
}

}  // namespace spikenn
