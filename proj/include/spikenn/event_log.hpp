#pragma once

#include "spikenn/event_engine.hpp"

#include <string>
#include <vector>

namespace spikenn {

// Text dump, one `phase,layer,neuron,sign` line per event; gzip-compressed
// when `gzip` is set (path conventionally ending in .gz).
void write_event_log(const std::vector<SpikeEvent>& events,
                     const std::string& path, bool gzip);

}  // namespace spikenn
