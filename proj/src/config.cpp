#include "sono/config.hpp"

#include <map>
#include <sstream>

namespace sono {

std::vector<ConfigId> RunConfig::default_grid_configurations() {
    std::vector<ConfigId> out;
    for (int i = 0; i < kClassCount; ++i) out.push_back(static_cast<ConfigId>(i));
    return out;
}

TrainConfig RunConfig::cnn_train_config(uint64_t cell) const {
    TrainConfig tc;
    tc.epochs = cnn_epochs;
    tc.validation_split = cnn_validation_split;
    tc.test_split = cnn_test_split;
    tc.batch_size = cnn_batch_size;
    tc.seed = splitmix64(cnn_seed ^ cell);
    return tc;
}

PreprocessConfig RunConfig::svc_preprocess() const {
    PreprocessConfig pc;
    pc.log_dynamic_range = log_dynamic_range;
    pc.target_height = svc_target_height;
    pc.target_width = svc_target_width;
    return pc;
}

PreprocessConfig RunConfig::cnn_preprocess() const {
    PreprocessConfig pc;
    pc.log_dynamic_range = log_dynamic_range;
    pc.target_height = cnn_target_height;
    pc.target_width = cnn_target_width;
    return pc;
}

SessionSpec RunConfig::session_spec(ConfigId configuration, Speed speed,
                                    uint64_t grid_seed) const {
    SessionSpec spec;
    spec.configuration = standard_configuration(configuration);
    spec.speed = speed;
    spec.duration_s = duration_s;
    spec.frame_rate_hz = frame_rate_hz;
    spec.image_height = image_height;
    spec.image_width = image_width;
    spec.noise_level = noise_level;
    spec.seed = cell_seed(grid_seed, configuration, speed);
    return spec;
}

uint64_t cell_seed(uint64_t grid_seed, ConfigId configuration, Speed speed) {
    const uint64_t cell = static_cast<uint64_t>(configuration) * 8 +
                          static_cast<uint64_t>(speed) + 0x5E5510ULL;
    return splitmix64(grid_seed ^ splitmix64(cell));
}

void RunConfig::validate() const {
    std::vector<std::string> problems;
    auto flag = [&](const std::string& m) { problems.push_back(m); };

    if (out_dir.empty()) flag("out_dir must not be empty");
    if (configurations.empty()) flag("configurations grid must not be empty");
    if (speeds.empty()) flag("speeds grid must not be empty");
    if (seeds.empty()) flag("seeds grid must not be empty");

    try {
        SessionSpec spec = session_spec(configurations.empty() ? ConfigId::C1 : configurations[0],
                                        speeds.empty() ? Speed::Medium : speeds[0],
                                        seeds.empty() ? 0 : seeds[0]);
        sono::validate(spec);
    } catch (const ConfigError& e) {
        flag(e.what());
    }

    if (!(log_dynamic_range > 1.0)) flag("log_dynamic_range must be > 1");
    auto check_target = [&](const char* which, int th, int tw) {
        if (th <= 0 || tw <= 0) {
            flag(std::string(which) + " target dims must be positive");
            return;
        }
        if (image_height % th != 0 || image_width % tw != 0)
            flag(std::string(which) + " target " + std::to_string(th) + "x" + std::to_string(tw) +
                 " does not divide image " + std::to_string(image_height) + "x" +
                 std::to_string(image_width));
    };
    check_target("svc", svc_target_height, svc_target_width);
    check_target("cnn", cnn_target_height, cnn_target_width);

    if (!(svc_lambda > 0.0)) flag("svc_lambda must be positive");
    if (svc_epochs < 1) flag("svc_epochs must be >= 1");
    if (!(svc_test_split > 0.0 && svc_test_split < 1.0)) flag("svc_test_split must lie in (0,1)");

    if (cnn_epochs < 1) flag("cnn_epochs must be >= 1");
    if (cnn_batch_size < 1) flag("cnn_batch_size must be >= 1");
    if (!(cnn_validation_split > 0.0 && cnn_validation_split < 1.0))
        flag("cnn_validation_split must lie in (0,1)");
    if (!(cnn_test_split > 0.0 && cnn_test_split < 1.0)) flag("cnn_test_split must lie in (0,1)");
    if (cnn_test_split + cnn_validation_split >= 1.0)
        flag("cnn test + validation splits must stay below 1");

    if (!problems.empty()) {
        std::string msg = "invalid run config (" + std::to_string(problems.size()) + " problem" +
                          (problems.size() == 1 ? "" : "s") + "):";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
}

std::string RunConfig::to_text() const {
    std::string out;
    auto kv = [&](const std::string& k, const std::string& v) { out += k + " = " + v + "\n"; };

    kv("out_dir", out_dir);
    std::string confs;
    for (ConfigId c : configurations) confs += (confs.empty() ? "" : ",") + std::string(config_code(c));
    kv("configurations", confs);
    std::string spds;
    for (Speed s : speeds) spds += (spds.empty() ? "" : ",") + std::string(speed_name(s));
    kv("speeds", spds);
    std::string sds;
    for (uint64_t s : seeds) sds += (sds.empty() ? "" : ",") + std::to_string(s);
    kv("seeds", sds);
    kv("duration_s", format_double(duration_s));
    kv("frame_rate_hz", format_double(frame_rate_hz));
    kv("image_height", std::to_string(image_height));
    kv("image_width", std::to_string(image_width));
    kv("noise_level", format_double(noise_level));
    kv("log_dynamic_range", format_double(log_dynamic_range));
    kv("svc_target_height", std::to_string(svc_target_height));
    kv("svc_target_width", std::to_string(svc_target_width));
    kv("cnn_target_height", std::to_string(cnn_target_height));
    kv("cnn_target_width", std::to_string(cnn_target_width));
    kv("svc_lambda", format_double(svc_lambda));
    kv("svc_epochs", std::to_string(svc_epochs));
    kv("svc_seed", std::to_string(svc_seed));
    kv("svc_test_split", format_double(svc_test_split));
    kv("cnn_epochs", std::to_string(cnn_epochs));
    kv("cnn_validation_split", format_double(cnn_validation_split));
    kv("cnn_test_split", format_double(cnn_test_split));
    kv("cnn_batch_size", std::to_string(cnn_batch_size));
    kv("cnn_seed", std::to_string(cnn_seed));
    kv("demo_configuration", config_code(demo_configuration));
    kv("demo_speed", speed_name(demo_speed));
    kv("demo_frames", std::to_string(demo_frames));
    return out;
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    std::vector<std::string> problems;

    while (std::getline(in, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto trim = [](std::string s) {
            const size_t a = s.find_first_not_of(" \t\r");
            const size_t b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back("line " + std::to_string(line_no) + ": expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        try {
            auto as_double = [&] { return std::stod(value); };
            auto as_int = [&] { return std::stoi(value); };
            auto as_u64 = [&] { return static_cast<uint64_t>(std::stoull(value)); };

            if (key == "out_dir") cfg.out_dir = value;
            else if (key == "configurations") {
                cfg.configurations.clear();
                for (const std::string& tok : split_list(value))
                    cfg.configurations.push_back(config_from_code(tok));
            } else if (key == "speeds") {
                cfg.speeds.clear();
                for (const std::string& tok : split_list(value))
                    cfg.speeds.push_back(speed_from_name(tok));
            } else if (key == "seeds") {
                cfg.seeds.clear();
                for (const std::string& tok : split_list(value))
                    cfg.seeds.push_back(static_cast<uint64_t>(std::stoull(tok)));
            } else if (key == "duration_s") cfg.duration_s = as_double();
            else if (key == "frame_rate_hz") cfg.frame_rate_hz = as_double();
            else if (key == "image_height") cfg.image_height = as_int();
            else if (key == "image_width") cfg.image_width = as_int();
            else if (key == "noise_level") cfg.noise_level = as_double();
            else if (key == "log_dynamic_range") cfg.log_dynamic_range = as_double();
            else if (key == "svc_target_height") cfg.svc_target_height = as_int();
            else if (key == "svc_target_width") cfg.svc_target_width = as_int();
            else if (key == "cnn_target_height") cfg.cnn_target_height = as_int();
            else if (key == "cnn_target_width") cfg.cnn_target_width = as_int();
            else if (key == "svc_lambda") cfg.svc_lambda = as_double();
            else if (key == "svc_epochs") cfg.svc_epochs = as_int();
            else if (key == "svc_seed") cfg.svc_seed = as_u64();
            else if (key == "svc_test_split") cfg.svc_test_split = as_double();
            else if (key == "cnn_epochs") cfg.cnn_epochs = as_int();
            else if (key == "cnn_validation_split") cfg.cnn_validation_split = as_double();
            else if (key == "cnn_test_split") cfg.cnn_test_split = as_double();
            else if (key == "cnn_batch_size") cfg.cnn_batch_size = as_int();
            else if (key == "cnn_seed") cfg.cnn_seed = as_u64();
            else if (key == "demo_configuration") cfg.demo_configuration = config_from_code(value);
            else if (key == "demo_speed") cfg.demo_speed = speed_from_name(value);
            else if (key == "demo_frames") cfg.demo_frames = as_u64();
            else problems.push_back("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        } catch (const ConfigError& e) {
            problems.push_back("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::exception&) {
            problems.push_back("line " + std::to_string(line_no) + ": bad value '" + value +
                               "' for key '" + key + "'");
        }
    }

    if (!problems.empty()) {
        std::string msg = origin + ": " + std::to_string(problems.size()) + " parse problem" +
                          (problems.size() == 1 ? "" : "s") + ":";
        for (const std::string& p : problems) msg += "\n  - " + p;
        throw ConfigError(msg);
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_file(path), path);
}

}  // namespace sono
