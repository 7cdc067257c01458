#pragma once

#include <string>

#include "stc/model.hpp"

namespace stc {

// Textual checkpoint: model config, the originating train-config hash, and
// every parameter at full double precision.
void save_checkpoint(const STModel& model, const std::string& config_hash,
                     const std::string& path);

struct Checkpoint {
    STModel model;
    std::string config_hash;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace stc
