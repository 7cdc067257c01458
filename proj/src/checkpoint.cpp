#include "stc/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "stc/error.hpp"

namespace stc {

void save_checkpoint(const STModel& model, const std::string& config_hash,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) fail("io", "cannot write checkpoint: " + path);
    const ModelConfig& cfg = model.config();
    out << "stc-checkpoint 1\n";
    out << "config_hash " << config_hash << "\n";
    out << "input_dim " << cfg.input_dim << "\n";
    out << "window " << cfg.window << "\n";
    out << "horizon " << cfg.horizon << "\n";
    out << "tap_block " << cfg.tap_block << "\n";
    out << "seed " << cfg.seed << "\n";
    out << "blocks " << cfg.blocks.size() << "\n";
    for (const BlockSpec& b : cfg.blocks) out << "block " << b.kernel << " " << b.channels << "\n";
    const std::vector<double> flat = model.flatten_params();
    out << "params " << flat.size() << "\n";
    char buf[40];
    for (std::size_t i = 0; i < flat.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", flat[i]);
        out << buf << ((i + 1) % 8 == 0 || i + 1 == flat.size() ? "\n" : " ");
    }
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open checkpoint: " + path);
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "stc-checkpoint" || version != 1) {
        fail("io", "not a recognized checkpoint file: " + path);
    }
    ModelConfig cfg;
    cfg.blocks.clear();
    std::string hash;
    std::size_t num_blocks = 0, num_params = 0;
    std::string key;
    while (in >> key) {
        if (key == "config_hash") in >> hash;
        else if (key == "input_dim") in >> cfg.input_dim;
        else if (key == "window") in >> cfg.window;
        else if (key == "horizon") in >> cfg.horizon;
        else if (key == "tap_block") in >> cfg.tap_block;
        else if (key == "seed") in >> cfg.seed;
        else if (key == "blocks") in >> num_blocks;
        else if (key == "block") {
            BlockSpec b;
            in >> b.kernel >> b.channels;
            cfg.blocks.push_back(b);
        } else if (key == "params") {
            in >> num_params;
            break;
        } else {
            fail("io", "unexpected checkpoint field '" + key + "' in " + path);
        }
    }
    if (cfg.blocks.size() != num_blocks) fail("io", "checkpoint block count mismatch: " + path);

    Checkpoint ck{STModel::init(cfg), hash};
    std::vector<double> flat(num_params);
    for (std::size_t i = 0; i < num_params; ++i) {
        if (!(in >> flat[i])) fail("io", "checkpoint parameter data truncated: " + path);
    }
    ck.model.set_params(flat);
    return ck;
}

}  // namespace stc
