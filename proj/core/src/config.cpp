#include "mtsdiag/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mtsdiag/rng.hpp"

namespace mtsdiag {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(trim(s.substr(start)));
            break;
        }
        out.push_back(trim(s.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

// Gathers parse problems so a bad config reports everything at once.
class Problems {
public:
    void add(const std::string& p) { items_.push_back(p); }
    void raise_if_any(const std::string& context) const {
        if (items_.empty()) return;
        std::ostringstream msg;
        msg << context << ":";
        for (const auto& p : items_) msg << "\n  - " << p;
        throw ConfigError(msg.str());
    }
    bool empty() const { return items_.empty(); }

private:
    std::vector<std::string> items_;
};

double parse_double(const std::string& value, const std::string& key, Problems& problems) {
    double out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        problems.add(key + ": expected a number, got '" + value + "'");
        return 0;
    }
    return out;
}

std::int64_t parse_int(const std::string& value, const std::string& key, Problems& problems) {
    std::int64_t out = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size()) {
        problems.add(key + ": expected an integer, got '" + value + "'");
        return 0;
    }
    return out;
}

bool parse_bool(const std::string& value, const std::string& key, Problems& problems) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    problems.add(key + ": expected true/false, got '" + value + "'");
    return false;
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

} // namespace

KeyValueSections parse_key_value_text(const std::string& text) {
    KeyValueSections sections;
    std::istringstream in(text);
    std::string line;
    std::string current;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(line_no) + ": unterminated section");
            current = trim(line.substr(1, line.size() - 2));
            sections[current];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        sections[current][key] = value;
    }
    return sections;
}

KeyValueSections parse_key_value_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_key_value_text(buffer.str());
}

namespace {

// Grammar of one anomaly line: space-separated key=value tokens, e.g.
//   series=3 interval=100:160 kind=constant_outlier value=7.5
AnomalySpec parse_anomaly_spec(const std::string& text, const std::string& key,
                               Problems& problems) {
    AnomalySpec spec;
    std::istringstream in(text);
    std::string token;
    bool have_kind = false;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) {
            problems.add(key + ": token '" + token + "' is not key=value");
            continue;
        }
        const std::string name = token.substr(0, eq);
        const std::string value = token.substr(eq + 1);
        if (name == "series") {
            spec.target_series = static_cast<Index>(parse_int(value, key + ".series", problems));
        } else if (name == "interval") {
            const auto colon = value.find(':');
            if (colon == std::string::npos) {
                problems.add(key + ": interval must be t1:t2");
            } else {
                spec.t1 = static_cast<Index>(
                    parse_int(value.substr(0, colon), key + ".interval", problems));
                spec.t2 = static_cast<Index>(
                    parse_int(value.substr(colon + 1), key + ".interval", problems));
            }
        } else if (name == "kind") {
            try {
                spec.kind = anomaly_kind_from_string(value);
                have_kind = true;
            } catch (const ConfigError& e) {
                problems.add(key + ": " + e.what());
            }
        } else if (name == "frequency") {
            spec.frequency = parse_double(value, key + ".frequency", problems);
        } else if (name == "amplitude") {
            spec.amplitude = parse_double(value, key + ".amplitude", problems);
        } else if (name == "value") {
            spec.value = parse_double(value, key + ".value", problems);
        } else if (name == "offset") {
            spec.offset = parse_double(value, key + ".offset", problems);
        } else {
            problems.add(key + ": unknown field '" + name + "'");
        }
    }
    if (!have_kind) problems.add(key + ": missing kind");
    return spec;
}

std::string serialize_anomaly_spec(const AnomalySpec& spec) {
    std::ostringstream out;
    out << "series=" << spec.target_series << " interval=" << spec.t1 << ":" << spec.t2
        << " kind=" << to_string(spec.kind);
    if (spec.frequency) out << " frequency=" << format_double(*spec.frequency);
    if (spec.amplitude) out << " amplitude=" << format_double(*spec.amplitude);
    if (spec.value) out << " value=" << format_double(*spec.value);
    if (spec.offset) out << " offset=" << format_double(*spec.offset);
    return out.str();
}

WvsConfig wvs_from_keys_impl(const std::map<std::string, std::string>& keys, Problems& problems) {
    WvsConfig c;
    for (const auto& [key, value] : keys) {
        if (key == "n_series") c.n_series = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "frequencies") {
            c.frequencies.clear();
            for (const auto& item : split(value, ','))
                c.frequencies.push_back(parse_double(item, key, problems));
        } else if (key == "group_sizes") {
            c.group_sizes.clear();
            for (const auto& item : split(value, ','))
                c.group_sizes.push_back(static_cast<Index>(parse_int(item, key, problems)));
        } else if (key == "amplitude_range") {
            const auto parts = split(value, ',');
            if (parts.size() != 2) problems.add(key + ": expected lo,hi");
            else {
                c.amplitude_lo = parse_double(parts[0], key, problems);
                c.amplitude_hi = parse_double(parts[1], key, problems);
            }
        } else if (key == "phase_range") {
            const auto parts = split(value, ',');
            if (parts.size() != 2) problems.add(key + ": expected lo,hi");
            else {
                c.phase_lo = parse_double(parts[0], key, problems);
                c.phase_hi = parse_double(parts[1], key, problems);
            }
        } else if (key == "noise_std") c.noise_std = parse_double(value, key, problems);
        else if (key == "length") c.length = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "train_length") c.train_length = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(value, key, problems));
        else if (key.rfind("anomaly", 0) == 0) {
            c.anomaly_specs.push_back(parse_anomaly_spec(value, key, problems));
        } else if (key == "source" || key == "wvs_file" || key == "train_csv" || key == "test_csv" ||
                   key == "has_header" || key == "dim_labels_csv" || key == "point_labels_csv") {
            // handled by the data section
        } else {
            problems.add("unknown data key: " + key);
        }
    }
    return c;
}

} // namespace

WvsConfig wvs_config_from_keys(const std::map<std::string, std::string>& keys) {
    Problems problems;
    WvsConfig c = wvs_from_keys_impl(keys, problems);
    problems.raise_if_any("invalid WVS config");
    return c;
}

std::string serialize_wvs_config(const WvsConfig& c) {
    std::ostringstream out;
    out << "n_series = " << c.n_series << "\n";
    out << "frequencies = ";
    for (std::size_t i = 0; i < c.frequencies.size(); ++i)
        out << (i ? "," : "") << format_double(c.frequencies[i]);
    out << "\ngroup_sizes = ";
    for (std::size_t i = 0; i < c.group_sizes.size(); ++i)
        out << (i ? "," : "") << c.group_sizes[i];
    out << "\namplitude_range = " << format_double(c.amplitude_lo) << ","
        << format_double(c.amplitude_hi) << "\n";
    out << "phase_range = " << format_double(c.phase_lo) << "," << format_double(c.phase_hi)
        << "\n";
    out << "noise_std = " << format_double(c.noise_std) << "\n";
    out << "length = " << c.length << "\n";
    out << "train_length = " << c.train_length << "\n";
    out << "seed = " << c.seed << "\n";
    for (std::size_t i = 0; i < c.anomaly_specs.size(); ++i)
        out << "anomaly" << i << " = " << serialize_anomaly_spec(c.anomaly_specs[i]) << "\n";
    return out.str();
}

RunConfig run_config_from_sections(const KeyValueSections& sections) {
    Problems problems;
    RunConfig config;

    auto section = [&](const std::string& name) -> std::map<std::string, std::string> {
        const auto it = sections.find(name);
        return it == sections.end() ? std::map<std::string, std::string>{} : it->second;
    };

    for (const auto& [key, value] : section("")) {
        if (key == "seed") config.seed = static_cast<std::uint64_t>(parse_int(value, key, problems));
        else if (key == "out") config.out_dir = value;
        else problems.add("unknown top-level key: " + key);
    }

    const auto data_keys = section("data");
    for (const auto& [key, value] : data_keys) {
        if (key == "source") {
            if (value != "wvs" && value != "csv")
                problems.add("data.source must be wvs or csv, got '" + value + "'");
            else config.data.source = value;
        } else if (key == "wvs_file") {
            config.data.wvs_file = value;
        } else if (key == "train_csv") config.data.train_csv = value;
        else if (key == "test_csv") config.data.test_csv = value;
        else if (key == "has_header") config.data.has_header = parse_bool(value, key, problems);
        else if (key == "dim_labels_csv") config.data.dim_labels_csv = value;
        else if (key == "point_labels_csv") config.data.point_labels_csv = value;
    }
    if (config.data.wvs_file) {
        try {
            const auto wvs_sections = parse_key_value_file(*config.data.wvs_file);
            const auto it = wvs_sections.find("");
            config.data.wvs = wvs_config_from_keys(
                it == wvs_sections.end() ? std::map<std::string, std::string>{} : it->second);
        } catch (const ConfigError& e) {
            problems.add(e.what());
        }
    } else {
        config.data.wvs = wvs_from_keys_impl(data_keys, problems);
    }

    for (const auto& [key, value] : section("model")) {
        if (key == "d_model") config.model.d_model = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "heads") config.model.H = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "layers") config.model.L = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "window") config.model.T = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "lambda") config.model.lambda = parse_double(value, key, problems);
        else if (key == "learning_rate") config.model.learning_rate = parse_double(value, key, problems);
        else if (key == "max_epochs") config.model.max_epochs = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "patience") config.model.patience = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "mlp_hidden") config.model.mlp_hidden = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "ff_hidden") config.model.ff_hidden = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "val_fraction") config.model.val_fraction = parse_double(value, key, problems);
        else problems.add("unknown model key: " + key);
    }

    for (const auto& [key, value] : section("detect")) {
        if (key == "k") config.detect.K = parse_double(value, key, problems);
        else if (key == "b") config.detect.b = parse_double(value, key, problems);
        else if (key == "n") config.detect.n = parse_double(value, key, problems);
        else if (key == "mu") config.detect.mu = parse_double(value, key, problems);
        else if (key == "reset_per_window")
            config.detect.reset_per_window = parse_bool(value, key, problems);
        else problems.add("unknown detect key: " + key);
    }

    for (const auto& [key, value] : section("localize")) {
        if (key == "method") {
            try {
                config.localize.method = correlation_method_from_string(value);
            } catch (const ConfigError& e) {
                problems.add(e.what());
            }
        } else if (key == "h1_mode") {
            if (value != "evaluation" && value != "fixed")
                problems.add("localize.h1_mode must be evaluation or fixed");
            else config.localize.h1_mode = value;
        } else if (key == "h1_percentile") config.localize.h1_percentile = parse_double(value, key, problems);
        else if (key == "h2_percentile") config.localize.h2_percentile = parse_double(value, key, problems);
        else if (key == "h2_per_series") config.localize.h2_per_series = parse_bool(value, key, problems);
        else if (key == "w1") config.localize.w1 = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "w2") config.localize.w2 = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "sfas_window") config.localize.sfas_window = static_cast<Index>(parse_int(value, key, problems));
        else if (key == "sweep_w2") config.localize.sweep_w2 = static_cast<Index>(parse_int(value, key, problems));
        else problems.add("unknown localize key: " + key);
    }

    for (const auto& [name, _] : sections) {
        if (name != "" && name != "data" && name != "model" && name != "detect" &&
            name != "localize")
            problems.add("unknown section: [" + name + "]");
    }

    // Range checks that do not depend on the data.
    if (config.localize.h2_percentile < 0 || config.localize.h2_percentile > 100)
        problems.add("localize.h2_percentile must lie in [0, 100]");
    if (config.localize.h1_percentile < 0 || config.localize.h1_percentile > 100)
        problems.add("localize.h1_percentile must lie in [0, 100]");
    if (config.localize.w1 < 0 || config.localize.w2 < 0 || config.localize.sweep_w2 < 0)
        problems.add("localize window sizes must be >= 0");
    if (config.localize.sfas_window < 4)
        problems.add("localize.sfas_window must be >= 4");
    if (config.data.source == "csv") {
        if (config.data.train_csv.empty()) problems.add("data.train_csv is required for csv source");
        if (config.data.test_csv.empty()) problems.add("data.test_csv is required for csv source");
    }

    problems.raise_if_any("invalid run config");

    // One top-level seed feeds every module.
    config.data.wvs.seed = config.seed;
    config.model.seed = config.seed;
    return config;
}

RunConfig parse_run_config(const std::filesystem::path& path) {
    const KeyValueSections sections = parse_key_value_file(path);
    RunConfig config = run_config_from_sections(sections);
    // Paths referenced by the config must exist up front.
    Problems problems;
    if (config.data.source == "csv") {
        if (!std::filesystem::exists(config.data.train_csv))
            problems.add("data.train_csv does not exist: " + config.data.train_csv.string());
        if (!std::filesystem::exists(config.data.test_csv))
            problems.add("data.test_csv does not exist: " + config.data.test_csv.string());
        if (config.data.dim_labels_csv && !std::filesystem::exists(*config.data.dim_labels_csv))
            problems.add("data.dim_labels_csv does not exist: " +
                         config.data.dim_labels_csv->string());
        if (config.data.point_labels_csv && !std::filesystem::exists(*config.data.point_labels_csv))
            problems.add("data.point_labels_csv does not exist: " +
                         config.data.point_labels_csv->string());
    }
    problems.raise_if_any("invalid run config");
    return config;
}

std::string serialize_section(const RunConfig& config, const std::string& section) {
    std::ostringstream out;
    if (section == "data") {
        out << "[data]\n";
        out << "source = " << config.data.source << "\n";
        if (config.data.source == "csv") {
            out << "train_csv = " << config.data.train_csv.string() << "\n";
            out << "test_csv = " << config.data.test_csv.string() << "\n";
            out << "has_header = " << (config.data.has_header ? "true" : "false") << "\n";
            if (config.data.dim_labels_csv)
                out << "dim_labels_csv = " << config.data.dim_labels_csv->string() << "\n";
            if (config.data.point_labels_csv)
                out << "point_labels_csv = " << config.data.point_labels_csv->string() << "\n";
        } else {
            std::istringstream wvs(serialize_wvs_config(config.data.wvs));
            std::string line;
            while (std::getline(wvs, line)) {
                if (line.rfind("seed = ", 0) == 0) continue; // follows the top-level seed
                out << line << "\n";
            }
        }
    } else if (section == "model") {
        out << "[model]\n";
        out << "d_model = " << config.model.d_model << "\n";
        out << "heads = " << config.model.H << "\n";
        out << "layers = " << config.model.L << "\n";
        out << "window = " << config.model.T << "\n";
        out << "lambda = " << format_double(config.model.lambda) << "\n";
        out << "learning_rate = " << format_double(config.model.learning_rate) << "\n";
        out << "max_epochs = " << config.model.max_epochs << "\n";
        out << "patience = " << config.model.patience << "\n";
        out << "mlp_hidden = " << config.model.mlp_hidden << "\n";
        out << "ff_hidden = " << config.model.ff_hidden << "\n";
        out << "val_fraction = " << format_double(config.model.val_fraction) << "\n";
    } else if (section == "detect") {
        out << "[detect]\n";
        out << "k = " << format_double(config.detect.K) << "\n";
        out << "b = " << format_double(config.detect.b) << "\n";
        out << "n = " << format_double(config.detect.n) << "\n";
        out << "mu = " << format_double(config.detect.mu) << "\n";
        out << "reset_per_window = " << (config.detect.reset_per_window ? "true" : "false") << "\n";
    } else if (section == "localize") {
        out << "[localize]\n";
        out << "method = " << to_string(config.localize.method) << "\n";
        out << "h1_mode = " << config.localize.h1_mode << "\n";
        out << "h1_percentile = " << format_double(config.localize.h1_percentile) << "\n";
        out << "h2_percentile = " << format_double(config.localize.h2_percentile) << "\n";
        out << "h2_per_series = " << (config.localize.h2_per_series ? "true" : "false") << "\n";
        out << "w1 = " << config.localize.w1 << "\n";
        out << "w2 = " << config.localize.w2 << "\n";
        out << "sfas_window = " << config.localize.sfas_window << "\n";
        out << "sweep_w2 = " << config.localize.sweep_w2 << "\n";
    } else {
        throw ConfigError("serialize_section: unknown section " + section);
    }
    return out.str();
}

std::string serialize_run_config(const RunConfig& config) {
    std::ostringstream out;
    out << "seed = " << config.seed << "\n";
    out << "out = " << config.out_dir.string() << "\n\n";
    out << serialize_section(config, "data");
    out << "\n" << serialize_section(config, "model");
    out << "\n" << serialize_section(config, "detect");
    out << "\n" << serialize_section(config, "localize");
    return out.str();
}

std::uint64_t config_hash(const RunConfig& config) {
    // The output directory does not affect artifact content; leave it out so
    // the same run in two locations hashes identically.
    std::istringstream in(serialize_run_config(config));
    std::ostringstream canon;
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("out = ", 0) != 0) canon << line << "\n";
    return fnv1a64(canon.str());
}

} // namespace mtsdiag
