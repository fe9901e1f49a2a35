#pragma once

#include "setlstm/model.hpp"
#include "setlstm/types.hpp"

#include <cstdint>
#include <string>

namespace setlstm {

// Full description of one training run. Serialized as flat key=value text;
// the keys are exactly the field names.
struct TrainConfig {
    Index vocab_size = 20000;  // V
    Index embed_dim = 256;     // D
    Index hidden_dim = 256;    // H
    Index seq_len = 100;       // T
    Index n_classes = 2;       // C
    double epsilon = 10.0;     // <= 0 means fully dense masks
    double zeta = 0.3;
    double lr = 0.001;
    Index batch_size = 64;
    Index epochs = 10;
    std::uint64_t seed = 1;
    bool rewire_enabled = true;
    std::string fixed_topology;            // optional checkpoint path
    std::string init_mode = "fresh";       // fresh | same-as-checkpoint

    ModelDims dims() const {
        return ModelDims{vocab_size, embed_dim, hidden_dim, seq_len, n_classes};
    }

    void validate() const;

    // Resuming requires the identical run description; a resumed run is the
    // continuation of the same trajectory, not a new one.
    bool compatible_for_resume(const TrainConfig& other) const;
};

TrainConfig parse_config(const std::string& text);
TrainConfig load_config(const std::string& path);
std::string serialize_config(const TrainConfig& config);

}  // namespace setlstm
