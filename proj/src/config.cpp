#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "stc/error.hpp"
#include "stc/training.hpp"

namespace stc {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<int> parse_int_list(const std::string& value, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            fail("config", "key '" + key + "': expected a comma-separated integer list, got '" +
                               value + "'");
        }
    }
    if (out.empty()) fail("config", "key '" + key + "': empty list");
    return out;
}

double parse_num(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("config", "key '" + key + "': expected a number, got '" + value + "'");
    }
}

int parse_int(const std::string& value, const std::string& key) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        fail("config", "key '" + key + "': expected an integer, got '" + value + "'");
    }
}

bool parse_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    fail("config", "key '" + key + "': expected true|false, got '" + value + "'");
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

}  // namespace

void TrainConfig::validate() const {
    auto expect = [](bool ok, const std::string& key, const std::string& range) {
        if (!ok) fail("config", "key '" + key + "' out of range: expected " + range);
    };
    expect(!channels.empty(), "model.channels", "a non-empty list");
    expect(channels.size() == kernels.size(), "model.kernels",
           "a list the same length as model.channels");
    for (int c : channels) expect(c >= 1, "model.channels", "positive integers");
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        const bool last = i + 1 == kernels.size();
        expect(kernels[i] >= (last ? 0 : 1), "model.kernels",
               "positive integers (0 allowed on the last block for auto sizing)");
    }
    expect(tap_block >= 0 && tap_block < static_cast<int>(channels.size()), "model.tap_block",
           "a block index in [0," + std::to_string(channels.size()) + ")");
    expect(window >= 1, "train.window", ">= 1");
    expect(horizon >= 1, "train.horizon", ">= 1");
    expect(batch_size >= 1, "train.batch_size", ">= 1");
    expect(lr > 0.0, "train.lr", "> 0");
    expect(max_epochs >= 1, "train.max_epochs", ">= 1");
    expect(patience >= 1, "train.patience", ">= 1");
    expect(min_delta >= 0.0, "train.min_delta", ">= 0");
    expect(alpha_bar > 0.0 && alpha_bar <= 1.0, "curriculum.alpha_bar", "in (0,1]");
    expect(rho > 0.0 && rho < 1.0, "curriculum.rho", "in (0,1)");
    expect(k >= 1, "curriculum.k", ">= 1");
    expect(beta_auto || beta > 0.0, "curriculum.beta", "'auto' or > 0");
    expect(refresh_every >= 0, "curriculum.refresh_every", ">= 0 (0 = once per epoch)");
    expect(eval_batch_windows >= 1, "curriculum.eval_batch_windows", ">= 1");
    expect(dropout_p >= 0.0 && dropout_p < 1.0, "curriculum.dropout_p", "in [0,1)");
    expect(train_ratio > 0.0 && val_ratio >= 0.0 && train_ratio + val_ratio < 1.0,
           "data.train_ratio/val_ratio", "positive with train_ratio + val_ratio < 1");
    expect(noise_delta >= 0.0, "data.noise_delta", ">= 0");
}

std::string TrainConfig::serialize() const {
    std::ostringstream out;
    char buf[96];
    auto num = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s = %.17g\n", key, v);
        out << buf;
    };
    out << "[model]\n";
    out << "channels = " << join_ints(channels) << "\n";
    out << "kernels = " << join_ints(kernels) << "\n";
    out << "tap_block = " << tap_block << "\n";
    out << "\n[train]\n";
    out << "window = " << window << "\n";
    out << "horizon = " << horizon << "\n";
    out << "batch_size = " << batch_size << "\n";
    num("lr", lr);
    out << "max_epochs = " << max_epochs << "\n";
    out << "patience = " << patience << "\n";
    num("min_delta", min_delta);
    out << "seed = " << seed << "\n";
    out << "\n[curriculum]\n";
    out << "strategy = " << strategy_to_string(strategy) << "\n";
    num("alpha_bar", alpha_bar);
    num("rho", rho);
    out << "k = " << k << "\n";
    if (beta_auto) {
        out << "beta = auto\n";
    } else {
        num("beta", beta);
    }
    out << "refresh_every = " << refresh_every << "\n";
    out << "eval_batch_windows = " << eval_batch_windows << "\n";
    num("dropout_p", dropout_p);
    out << "use_weighting = " << (use_weighting ? "true" : "false") << "\n";
    out << "\n[data]\n";
    num("train_ratio", train_ratio);
    num("val_ratio", val_ratio);
    num("noise_delta", noise_delta);
    return out.str();
}

std::string TrainConfig::hash() const {
    const std::string s = serialize();
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TrainConfig TrainConfig::parse(const std::string& text) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                fail("config", "malformed section header at line " + std::to_string(lineno));
            }
            section = line.substr(1, line.size() - 2);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail("config", "expected 'key = value' at line " + std::to_string(lineno));
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        if (key == "model.channels") cfg.channels = parse_int_list(value, key);
        else if (key == "model.kernels") cfg.kernels = parse_int_list(value, key);
        else if (key == "model.tap_block") cfg.tap_block = parse_int(value, key);
        else if (key == "train.window") cfg.window = parse_int(value, key);
        else if (key == "train.horizon") cfg.horizon = parse_int(value, key);
        else if (key == "train.batch_size") cfg.batch_size = parse_int(value, key);
        else if (key == "train.lr") cfg.lr = parse_num(value, key);
        else if (key == "train.max_epochs") cfg.max_epochs = parse_int(value, key);
        else if (key == "train.patience") cfg.patience = parse_int(value, key);
        else if (key == "train.min_delta") cfg.min_delta = parse_num(value, key);
        else if (key == "train.seed") cfg.seed = static_cast<std::uint64_t>(std::stoull(value));
        else if (key == "curriculum.strategy") cfg.strategy = strategy_from_string(value);
        else if (key == "curriculum.alpha_bar") cfg.alpha_bar = parse_num(value, key);
        else if (key == "curriculum.rho") cfg.rho = parse_num(value, key);
        else if (key == "curriculum.k") cfg.k = parse_int(value, key);
        else if (key == "curriculum.beta") {
            if (value == "auto") {
                cfg.beta_auto = true;
                cfg.beta = 0.0;
            } else {
                cfg.beta_auto = false;
                cfg.beta = parse_num(value, key);
            }
        } else if (key == "curriculum.refresh_every") cfg.refresh_every = parse_int(value, key);
        else if (key == "curriculum.eval_batch_windows")
            cfg.eval_batch_windows = parse_int(value, key);
        else if (key == "curriculum.dropout_p") cfg.dropout_p = parse_num(value, key);
        else if (key == "curriculum.use_weighting") cfg.use_weighting = parse_bool(value, key);
        else if (key == "data.train_ratio") cfg.train_ratio = parse_num(value, key);
        else if (key == "data.val_ratio") cfg.val_ratio = parse_num(value, key);
        else if (key == "data.noise_delta") cfg.noise_delta = parse_num(value, key);
        else fail("config", "unknown key '" + key + "' at line " + std::to_string(lineno));
    }
    cfg.validate();
    return cfg;
}

TrainConfig TrainConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

ModelConfig TrainConfig::model_config(int input_dim) const {
    ModelConfig mc;
    mc.input_dim = input_dim;
    mc.window = window;
    mc.horizon = horizon;
    mc.blocks.clear();
    for (std::size_t i = 0; i < channels.size(); ++i) {
        mc.blocks.push_back({kernels[i], channels[i]});
    }
    mc.tap_block = tap_block;
    mc.seed = seed;
    return mc;
}

}  // namespace stc
