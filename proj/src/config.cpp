#include "setlstm/config.hpp"

#include "setlstm/errors.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace setlstm {

void TrainConfig::validate() const {
    if (vocab_size < 3) throw ConfigError("vocab_size must be >= 3 (PAD, OOV + words)");
    if (embed_dim < 1 || hidden_dim < 1 || seq_len < 1)
        throw ConfigError("embed_dim, hidden_dim and seq_len must be positive");
    if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
    if (zeta < 0.0 || zeta > 1.0) throw ConfigError("zeta must lie in [0,1]");
    if (lr <= 0.0) throw ConfigError("lr must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (init_mode != "fresh" && init_mode != "same-as-checkpoint")
        throw ConfigError("init_mode must be 'fresh' or 'same-as-checkpoint'");
    if (init_mode == "same-as-checkpoint" && fixed_topology.empty())
        throw ConfigError("init_mode=same-as-checkpoint requires fixed_topology");
}

bool TrainConfig::compatible_for_resume(const TrainConfig& other) const {
    return vocab_size == other.vocab_size && embed_dim == other.embed_dim &&
           hidden_dim == other.hidden_dim && seq_len == other.seq_len &&
           n_classes == other.n_classes && epsilon == other.epsilon &&
           zeta == other.zeta && lr == other.lr && batch_size == other.batch_size &&
           epochs == other.epochs && seed == other.seed &&
           rewire_enabled == other.rewire_enabled &&
           fixed_topology == other.fixed_topology && init_mode == other.init_mode;
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad numeric value for " + key + ": '" + value + "'");
    }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size())
        throw ConfigError("bad integer value for " + key + ": '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("bad boolean value for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
    std::size_t lo = s.find_first_not_of(" \t\r");
    if (lo == std::string::npos) return "";
    std::size_t hi = s.find_last_not_of(" \t\r");
    return s.substr(lo, hi - lo + 1);
}

}  // namespace

TrainConfig parse_config(const std::string& text) {
    TrainConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));

        if (key == "vocab_size") c.vocab_size = static_cast<Index>(parse_int(key, value));
        else if (key == "embed_dim") c.embed_dim = static_cast<Index>(parse_int(key, value));
        else if (key == "hidden_dim") c.hidden_dim = static_cast<Index>(parse_int(key, value));
        else if (key == "seq_len") c.seq_len = static_cast<Index>(parse_int(key, value));
        else if (key == "n_classes") c.n_classes = static_cast<Index>(parse_int(key, value));
        else if (key == "epsilon") c.epsilon = parse_double(key, value);
        else if (key == "zeta") c.zeta = parse_double(key, value);
        else if (key == "lr") c.lr = parse_double(key, value);
        else if (key == "batch_size") c.batch_size = static_cast<Index>(parse_int(key, value));
        else if (key == "epochs") c.epochs = static_cast<Index>(parse_int(key, value));
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
        else if (key == "rewire_enabled") c.rewire_enabled = parse_bool(key, value);
        else if (key == "fixed_topology") c.fixed_topology = value;
        else if (key == "init_mode") c.init_mode = value;
        else throw ConfigError("unknown config key: '" + key + "'");
    }
    c.validate();
    return c;
}

TrainConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const TrainConfig& c) {
    char num[64];
    std::ostringstream out;
    out << "vocab_size=" << c.vocab_size << '\n'
        << "embed_dim=" << c.embed_dim << '\n'
        << "hidden_dim=" << c.hidden_dim << '\n'
        << "seq_len=" << c.seq_len << '\n'
        << "n_classes=" << c.n_classes << '\n';
    std::snprintf(num, sizeof num, "%.17g", c.epsilon);
    out << "epsilon=" << num << '\n';
    std::snprintf(num, sizeof num, "%.17g", c.zeta);
    out << "zeta=" << num << '\n';
    std::snprintf(num, sizeof num, "%.17g", c.lr);
    out << "lr=" << num << '\n';
    out << "batch_size=" << c.batch_size << '\n'
        << "epochs=" << c.epochs << '\n'
        << "seed=" << c.seed << '\n'
        << "rewire_enabled=" << (c.rewire_enabled ? "true" : "false") << '\n';
    if (!c.fixed_topology.empty()) out << "fixed_topology=" << c.fixed_topology << '\n';
    out << "init_mode=" << c.init_mode << '\n';
    return out.str();
}

}  // namespace setlstm
