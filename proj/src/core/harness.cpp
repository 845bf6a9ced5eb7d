// SPDX-License-Identifier: Apache-2.0
#include "harness.hpp"

#include <chrono>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace dcbleo::harness {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// ---- JSON field access with path diagnostics ----

void check_keys(const ojson& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ConfigError(fmt::format("{}: expected an object", path));
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(fmt::format("{}: unknown key '{}'", path, key));
    }
}

template <class T>
void read(const ojson& j, const char* key, const std::string& path, T& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    const auto where = fmt::format("{}.{}", path, key);
    if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError(fmt::format("{}: expected a number", where));
        out = v.get<double>();
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ConfigError(fmt::format("{}: expected a non-negative integer", where));
        out = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw ConfigError(fmt::format("{}: expected an integer", where));
        const auto x = v.get<std::int64_t>();
        if (x < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
            x > static_cast<std::int64_t>(std::numeric_limits<T>::max()))
            throw ConfigError(fmt::format("{}: integer out of range", where));
        out = static_cast<T>(x);
    } else {
        static_assert(sizeof(T) == 0, "unsupported field type");
    }
}

Objectives read_triple(const ojson& v, const std::string& where) {
    if (!v.is_array() || v.size() != 3) throw ConfigError(fmt::format("{}: expected an array of 3 numbers", where));
    Objectives out{};
    for (std::size_t i = 0; i < 3; ++i) {
        if (!v[i].is_number()) throw ConfigError(fmt::format("{}[{}]: expected a number", where, i));
        out[i] = v[i].get<double>();
    }
    return out;
}

ojson parse_json(const std::string& text, const char* what) {
    try {
        return ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(fmt::format("{}: parse error at line {}, column {}: {}", what, line, col, e.what()));
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    os << text;
    if (!os) throw IoError(fmt::format("failed writing {}", path.string()));
}

double parse_double(std::string_view s, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(fmt::format("{}: '{}' is not a number", what, s));
    return v;
}

long parse_long(std::string_view s, const std::string& what) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ConfigError(fmt::format("{}: '{}' is not an integer", what, s));
    return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

std::uint64_t terminal_seed(const Scenario& s) { return derive_seed(s.seed, "terminals"); }

orbits::OrbitalElements sat(double incl, double phase, double altitude, const orbits::PhysicalConstants& c) {
    return orbits::OrbitalElements::circular(wrap_angle(incl), 0.0, phase, 0.0, altitude, c);
}

// One shell: `equatorial` satellites in the equatorial plane plus `inclined` in each of the +-pi/8 planes.
void add_shell(Scenario& s, int equatorial, int inclined, double altitude) {
    const double tilt = std::numbers::pi / 8.0;
    for (int k = 0; k < equatorial; ++k) s.constellation.push_back(sat(0.0, kTwoPi * k / equatorial, altitude, s.constants));
    for (double incl : {tilt, -tilt})
        for (int k = 0; k < inclined; ++k)
            s.constellation.push_back(sat(incl, kTwoPi * (k + 0.5) / inclined, altitude, s.constants));
}

channel::RfConstants default_rf() {
    channel::RfConstants rf;
    rf.carrier_frequency = 2.4e9;
    rf.bandwidth = 1e7;
    rf.path_loss_exponent = 2.0;
    rf.p_min = 1.0;
    rf.p_max = 2.0;
    rf.channel_power_gain = channel::free_space_gain(rf.carrier_frequency);
    rf.noise_power = channel::noise_power_from_psd(kNoisePsdDbmPerHz, rf.bandwidth);
    return rf;
}

Objectives reported(const Objectives& signed_objectives) {
    return {signed_objectives[0], -signed_objectives[1], -signed_objectives[2]};
}

}  // namespace

std::vector<GroundPoint> place_terminals(double side, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<GroundPoint> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = (uniform01(rng) - 0.5) * side;
        const double y = (uniform01(rng) - 0.5) * side;
        out.push_back({x, y});
    }
    return out;
}

double reference_distance(const Scenario& scenario) {
    if (scenario.constellation.empty()) throw ConfigError("scenario has no satellites");
    double d = scenario.constellation.front().altitude;
    for (const auto& e : scenario.constellation) d = std::min(d, e.altitude);
    return d;
}

void calibrate(Scenario& s) {
    const double d = reference_distance(s);
    const auto n = static_cast<double>(s.num_terminals());
    const auto& rf = s.rf;
    s.rf.rho0 = channel::balanced_rho0(rf, s.num_terminals(), d, s.slot_duration);
    const double snr_max = n * n * rf.p_max * rf.channel_power_gain * std::pow(d, -rf.path_loss_exponent) / rf.noise_power;
    s.rewards.rate = 1.0 / channel::achievable_rate(snr_max, rf);
    s.rewards.energy = 1.0 / (n * rf.p_max * s.slot_duration);
    s.rewards.switching = 1.0;
}

Scenario default_scenario() {
    Scenario s;
    s.rf = default_rf();
    add_shell(s, 60, 10, 5e5);
    add_shell(s, 20, 5, 1e6);
    s.terminals = place_terminals(s.area_side, 10, terminal_seed(s));
    calibrate(s);
    return s;
}

Scenario desk_scenario() {
    Scenario s;
    s.rf = default_rf();
    s.slots = 30;
    const double tilt = std::numbers::pi / 8.0;
    // Phases staggered so that passes overlap and two to four satellites are visible in every slot.
    for (int k = 0; k < 8; ++k) {
        const double incl = k == 2 ? tilt : (k == 5 ? -tilt : 0.0);
        s.constellation.push_back(sat(incl, deg2rad(10.0 - 16.0 * k), 5e5, s.constants));
    }
    for (int k = 0; k < 4; ++k) s.constellation.push_back(sat(0.0, deg2rad(20.0 - 35.0 * k), 1e6, s.constants));
    s.terminals = place_terminals(s.area_side, 10, terminal_seed(s));
    calibrate(s);
    return s;
}

Scenario scenario_from_json(const std::string& text) {
    const auto j = parse_json(text, "scenario");
    check_keys(j, "scenario",
               {"constants", "constellation", "terminals", "area_side", "site_longitude", "rf", "slots",
                "slot_duration", "rate_threshold", "unavailability", "min_elevation", "num_schemes", "seed",
                "rewards"});
    Scenario s;
    if (j.contains("constants")) {
        const auto& c = j.at("constants");
        check_keys(c, "scenario.constants", {"earth_radius", "gravitational_constant", "earth_mass"});
        read(c, "earth_radius", "scenario.constants", s.constants.earth_radius);
        read(c, "gravitational_constant", "scenario.constants", s.constants.gravitational_constant);
        read(c, "earth_mass", "scenario.constants", s.constants.earth_mass);
    }
    read(j, "area_side", "scenario", s.area_side);
    read(j, "site_longitude", "scenario", s.site_longitude);
    read(j, "slots", "scenario", s.slots);
    read(j, "slot_duration", "scenario", s.slot_duration);
    read(j, "rate_threshold", "scenario", s.rate_threshold);
    read(j, "unavailability", "scenario", s.unavailability);
    read(j, "min_elevation", "scenario", s.min_elevation);
    read(j, "num_schemes", "scenario", s.num_schemes);
    read(j, "seed", "scenario", s.seed);

    if (j.contains("constellation")) {
        const auto& arr = j.at("constellation");
        if (!arr.is_array()) throw ConfigError("scenario.constellation: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto path = fmt::format("scenario.constellation[{}]", i);
            check_keys(arr[i], path,
                       {"inclination", "raan", "argument_of_perigee", "true_anomaly", "altitude", "eccentricity"});
            double incl = 0, raan = 0, aop = 0, ta = 0, alt = 0, ecc = 0;
            read(arr[i], "inclination", path, incl);
            read(arr[i], "raan", path, raan);
            read(arr[i], "argument_of_perigee", path, aop);
            read(arr[i], "true_anomaly", path, ta);
            read(arr[i], "altitude", path, alt);
            read(arr[i], "eccentricity", path, ecc);
            orbits::OrbitalElements e;
            e.inclination = incl;
            e.raan = raan;
            e.argument_of_perigee = aop;
            e.true_anomaly = ta;
            e.altitude = alt;
            e.eccentricity = ecc;
            e.semi_major_axis = alt + s.constants.earth_radius;
            s.constellation.push_back(e);
        }
    }
    if (j.contains("terminals")) {
        const auto& arr = j.at("terminals");
        if (!arr.is_array()) throw ConfigError("scenario.terminals: expected an array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const auto path = fmt::format("scenario.terminals[{}]", i);
            if (!arr[i].is_array() || arr[i].size() != 2 || !arr[i][0].is_number() || !arr[i][1].is_number())
                throw ConfigError(fmt::format("{}: expected [x, y]", path));
            s.terminals.push_back({arr[i][0].get<double>(), arr[i][1].get<double>()});
        }
    }
    bool have_rho0 = false;
    s.rf = default_rf();
    if (j.contains("rf")) {
        const auto& r = j.at("rf");
        check_keys(r, "scenario.rf",
                   {"channel_power_gain", "path_loss_exponent", "noise_power", "bandwidth", "carrier_frequency",
                    "p_min", "p_max", "rho0"});
        read(r, "carrier_frequency", "scenario.rf", s.rf.carrier_frequency);
        read(r, "bandwidth", "scenario.rf", s.rf.bandwidth);
        s.rf.channel_power_gain = channel::free_space_gain(s.rf.carrier_frequency);
        s.rf.noise_power = channel::noise_power_from_psd(kNoisePsdDbmPerHz, s.rf.bandwidth);
        read(r, "channel_power_gain", "scenario.rf", s.rf.channel_power_gain);
        read(r, "path_loss_exponent", "scenario.rf", s.rf.path_loss_exponent);
        read(r, "noise_power", "scenario.rf", s.rf.noise_power);
        read(r, "p_min", "scenario.rf", s.rf.p_min);
        read(r, "p_max", "scenario.rf", s.rf.p_max);
        have_rho0 = r.contains("rho0");
        read(r, "rho0", "scenario.rf", s.rf.rho0);
    }
    const bool have_rewards = j.contains("rewards");
    if (!have_rho0 || !have_rewards) {
        const double rho0 = s.rf.rho0;
        if (s.constellation.empty() || s.terminals.empty() || !(s.slot_duration > 0.0))
            s.validate();  // reports the missing piece
        calibrate(s);
        if (have_rho0) s.rf.rho0 = rho0;
    }
    if (have_rewards) {
        const auto& r = j.at("rewards");
        check_keys(r, "scenario.rewards", {"rate", "energy", "switching"});
        read(r, "rate", "scenario.rewards", s.rewards.rate);
        read(r, "energy", "scenario.rewards", s.rewards.energy);
        read(r, "switching", "scenario.rewards", s.rewards.switching);
    }
    s.validate();
    return s;
}

std::string scenario_to_json(const Scenario& s) {
    ojson j;
    j["constants"] = {{"earth_radius", s.constants.earth_radius},
                      {"gravitational_constant", s.constants.gravitational_constant},
                      {"earth_mass", s.constants.earth_mass}};
    j["area_side"] = s.area_side;
    j["site_longitude"] = s.site_longitude;
    j["slots"] = s.slots;
    j["slot_duration"] = s.slot_duration;
    j["rate_threshold"] = s.rate_threshold;
    j["unavailability"] = s.unavailability;
    j["min_elevation"] = s.min_elevation;
    j["num_schemes"] = s.num_schemes;
    j["seed"] = s.seed;
    j["rf"] = {{"channel_power_gain", s.rf.channel_power_gain}, {"path_loss_exponent", s.rf.path_loss_exponent},
               {"noise_power", s.rf.noise_power},             {"bandwidth", s.rf.bandwidth},
               {"carrier_frequency", s.rf.carrier_frequency}, {"p_min", s.rf.p_min},
               {"p_max", s.rf.p_max},                         {"rho0", s.rf.rho0}};
    j["rewards"] = {{"rate", s.rewards.rate}, {"energy", s.rewards.energy}, {"switching", s.rewards.switching}};
    j["terminals"] = ojson::array();
    for (const auto& t : s.terminals) j["terminals"].push_back({t.x, t.y});
    j["constellation"] = ojson::array();
    for (const auto& e : s.constellation) {
        j["constellation"].push_back({{"inclination", e.inclination},
                                      {"raan", e.raan},
                                      {"argument_of_perigee", e.argument_of_perigee},
                                      {"true_anomaly", e.true_anomaly},
                                      {"altitude", e.altitude}});
    }
    return j.dump(2) + "\n";
}

Scenario load_scenario(const fs::path& path) {
    const auto text = read_file(path);
    try {
        return scenario_from_json(text);
    } catch (const ConfigError& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void save_scenario(const Scenario& scenario, const fs::path& path) { write_file(path, scenario_to_json(scenario)); }

Scenario apply_overrides(const Scenario& scenario, const ReplayOverrides& o) {
    Scenario s = scenario;
    if (o.unavailability) s.unavailability = *o.unavailability;
    if (o.terminals) {
        const std::size_t n = *o.terminals;
        if (n < 1) throw ConfigError("terminal override must be >= 1");
        if (n <= s.terminals.size()) {
            s.terminals.resize(n);
        } else {
            const auto stream = place_terminals(s.area_side, n, terminal_seed(s));
            for (std::size_t i = s.terminals.size(); i < n; ++i) s.terminals.push_back(stream[i]);
        }
        calibrate(s);
    }
    s.validate();
    return s;
}

void override_scenario(Scenario& s, const std::string& key, const std::string& value) {
    const auto what = fmt::format("override {}", key);
    if (key == "p" || key == "unavailability") {
        s = apply_overrides(s, {parse_double(value, what), std::nullopt});
    } else if (key == "terminals") {
        const long n = parse_long(value, what);
        if (n < 1) throw ConfigError("terminals override must be >= 1");
        s = apply_overrides(s, {std::nullopt, static_cast<std::size_t>(n)});
    } else if (key == "seed") {
        const long v = parse_long(value, what);
        if (v < 0) throw ConfigError("seed must be >= 0");
        s.seed = static_cast<std::uint64_t>(v);
    } else if (key == "slots") {
        s.slots = static_cast<int>(parse_long(value, what));
    } else if (key == "rate_threshold") {
        s.rate_threshold = parse_double(value, what);
    } else if (key == "num_schemes") {
        s.num_schemes = static_cast<int>(parse_long(value, what));
    } else {
        throw ConfigError(fmt::format("unknown scenario override '{}'", key));
    }
    s.validate();
}

ExperimentConfig ExperimentConfig::paper() { return {}; }

ExperimentConfig ExperimentConfig::desk() {
    ExperimentConfig c;
    auto& e = c.emodrl;
    e.num_tasks = 4;
    e.warmup_iterations = 20;
    e.task_iterations = 5;
    e.generations = 20;
    e.agent.hidden = {64, 64};
    e.agent.learning_rate = 1e-3;
    e.agent.batch_size = 64;
    return c;
}

ExperimentConfig experiment_from_json(const std::string& text, const ExperimentConfig& base) {
    const auto j = parse_json(text, "algorithm config");
    const std::string p = "algorithm";
    check_keys(j, p,
               {"num_tasks", "warmup_iterations", "task_iterations", "generations", "buffer_count", "buffer_size",
                "epsilon_decay_fraction", "eval_episodes", "threads", "hv_reference", "gamma", "epsilon_start",
                "epsilon_end", "replay_capacity", "batch_size", "target_sync_steps", "gradient_steps",
                "learning_rate", "gradient_clip", "hidden"});
    ExperimentConfig c = base;
    auto& e = c.emodrl;
    auto& a = e.agent;
    read(j, "num_tasks", p, e.num_tasks);
    read(j, "warmup_iterations", p, e.warmup_iterations);
    read(j, "task_iterations", p, e.task_iterations);
    read(j, "generations", p, e.generations);
    read(j, "buffer_count", p, e.buffer_count);
    read(j, "buffer_size", p, e.buffer_size);
    read(j, "epsilon_decay_fraction", p, e.epsilon_decay_fraction);
    read(j, "eval_episodes", p, e.eval_episodes);
    read(j, "threads", p, e.threads);
    if (j.contains("hv_reference")) e.hv_reference = read_triple(j.at("hv_reference"), p + ".hv_reference");
    read(j, "gamma", p, a.gamma);
    read(j, "epsilon_start", p, a.epsilon_start);
    read(j, "epsilon_end", p, a.epsilon_end);
    read(j, "replay_capacity", p, a.replay_capacity);
    read(j, "batch_size", p, a.batch_size);
    read(j, "target_sync_steps", p, a.target_sync_steps);
    read(j, "gradient_steps", p, a.gradient_steps);
    read(j, "learning_rate", p, a.learning_rate);
    read(j, "gradient_clip", p, a.gradient_clip);
    if (j.contains("hidden")) {
        const auto& h = j.at("hidden");
        if (!h.is_array() || h.empty()) throw ConfigError("algorithm.hidden: expected a nonempty array of widths");
        a.hidden.clear();
        for (const auto& w : h) {
            if (!w.is_number_integer()) throw ConfigError("algorithm.hidden: widths must be integers");
            a.hidden.push_back(w.get<int>());
        }
    }
    e.validate();
    return c;
}

std::string experiment_to_json(const ExperimentConfig& c) {
    const auto& e = c.emodrl;
    const auto& a = e.agent;
    ojson j;
    j["num_tasks"] = e.num_tasks;
    j["warmup_iterations"] = e.warmup_iterations;
    j["task_iterations"] = e.task_iterations;
    j["generations"] = e.generations;
    j["buffer_count"] = e.buffer_count;
    j["buffer_size"] = e.buffer_size;
    j["epsilon_decay_fraction"] = e.epsilon_decay_fraction;
    j["eval_episodes"] = e.eval_episodes;
    j["threads"] = e.threads;
    j["hv_reference"] = e.hv_reference;
    j["gamma"] = a.gamma;
    j["epsilon_start"] = a.epsilon_start;
    j["epsilon_end"] = a.epsilon_end;
    j["replay_capacity"] = a.replay_capacity;
    j["batch_size"] = a.batch_size;
    j["target_sync_steps"] = a.target_sync_steps;
    j["gradient_steps"] = a.gradient_steps;
    j["learning_rate"] = a.learning_rate;
    j["gradient_clip"] = a.gradient_clip;
    j["hidden"] = a.hidden;
    return j.dump(2) + "\n";
}

std::string_view to_string(Tendency t) {
    switch (t) {
        case Tendency::FavorRate: return "favor-rate";
        case Tendency::FavorEnergy: return "favor-energy";
        case Tendency::FavorSwitching: return "favor-switching";
        case Tendency::Balanced: return "balanced";
    }
    return "unknown";
}

Weight3 tendency_weight(Tendency t) {
    switch (t) {
        case Tendency::FavorRate: return {1.0, 0.0, 0.0};
        case Tendency::FavorEnergy: return {0.0, 1.0, 0.0};
        case Tendency::FavorSwitching: return {0.0, 0.0, 1.0};
        case Tendency::Balanced: return {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    }
    return {};
}

Weight3 parse_preference(const std::string& text) {
    for (auto t : kTendencies)
        if (text == to_string(t)) return tendency_weight(t);
    const auto parts = split(text, ',');
    if (parts.size() != 3)
        throw ConfigError(fmt::format(
            "preference '{}' is neither a tendency (favor-rate, favor-energy, favor-switching, balanced) nor w1,w2,w3",
            text));
    Weight3 w{};
    for (std::size_t i = 0; i < 3; ++i) {
        w[i] = parse_double(parts[i], "preference");
        if (!(w[i] >= 0.0)) throw ConfigError("preference weights must be >= 0");
    }
    if (!(w[0] + w[1] + w[2] > 0.0)) throw ConfigError("preference weights must not all be zero");
    return w;
}

std::size_t select_index(const std::vector<Objectives>& scores, const Weight3& preference) {
    if (scores.empty()) throw StateError("cannot select from an empty archive");
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (dot3(preference, scores[i]) > dot3(preference, scores[best])) best = i;
    return best;
}

std::size_t select_policy(const std::vector<ArchiveEntry>& archive, const Weight3& preference) {
    std::vector<Objectives> s;
    for (const auto& e : archive) s.push_back(e.scores);
    return select_index(s, preference);
}

namespace {
constexpr std::string_view kArchiveHeader =
    "member,generation,f1_bps,f2_j,f3,score_rate,score_energy,score_switching,w1,w2,w3,checkpoint";
constexpr std::string_view kTraceHeader = "slot,satellite,scheme,rate_bps,total_power_w,switched,available";
constexpr std::string_view kGenerationHeader = "generation,population,archive,hypervolume";
}  // namespace

void write_archive_csv(const fs::path& path, const std::vector<ArchiveEntry>& entries) {
    std::string out{kArchiveHeader};
    out += '\n';
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (e.checkpoint.find_first_of(",\n") != std::string::npos)
            throw IoError("checkpoint paths must not contain commas or newlines");
        const auto f = reported(e.objectives);
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", i, e.generation, f[0], f[1], f[2], e.scores[0],
                           e.scores[1], e.scores[2], e.weight[0], e.weight[1], e.weight[2], e.checkpoint);
    }
    write_file(path, out);
}

std::vector<ArchiveEntry> read_archive_csv(const fs::path& path) {
    std::istringstream is(read_file(path));
    std::string line;
    if (!std::getline(is, line) || split(line, ',') != split(std::string(kArchiveHeader), ','))
        throw ConfigError(fmt::format("{}: not an archive CSV (unexpected header)", path.string()));
    std::vector<ArchiveEntry> out;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty()) continue;
        const auto c = split(line, ',');
        const auto what = fmt::format("{}:{}", path.string(), row);
        if (c.size() != 12) throw ConfigError(fmt::format("{}: expected 12 columns, got {}", what, c.size()));
        ArchiveEntry e;
        e.generation = static_cast<int>(parse_long(c[1], what));
        e.objectives = {parse_double(c[2], what), -parse_double(c[3], what), -parse_double(c[4], what)};
        e.scores = {parse_double(c[5], what), parse_double(c[6], what), parse_double(c[7], what)};
        e.weight = {parse_double(c[8], what), parse_double(c[9], what), parse_double(c[10], what)};
        e.checkpoint = c[11];
        out.push_back(std::move(e));
    }
    return out;
}

void write_generations_csv(const fs::path& path, const std::vector<emodrl::GenerationLog>& log) {
    std::string out{kGenerationHeader};
    out += '\n';
    for (const auto& g : log) out += fmt::format("{},{},{},{}\n", g.generation, g.population, g.archive, g.hypervolume);
    write_file(path, out);
}

void write_trace_csv(const fs::path& path, const env::EpisodeLedger& ledger) {
    std::string out{kTraceHeader};
    out += '\n';
    for (const auto& r : ledger.trace)
        out += fmt::format("{},{},{},{},{},{},{}\n", r.slot, r.satellite, r.scheme, r.rate, r.total_power, r.switched,
                           r.available_count);
    write_file(path, out);
}

agent::PolicyEvaluation replay_policy(const agent::PolicySnapshot& policy, const Scenario& scenario,
                                      const ReplayOverrides& overrides, const std::vector<std::uint64_t>& seeds) {
    env::Environment env(apply_overrides(scenario, overrides));
    return agent::evaluate_policy(policy, env, seeds);
}

agent::PolicySnapshot load_policy(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError(fmt::format("cannot open policy {}", path.string()));
    return agent::read_policy(is);
}

void save_policy(const agent::PolicySnapshot& policy, const fs::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError(fmt::format("cannot open {} for writing", path.string()));
    agent::write_policy(os, policy);
}

std::vector<fs::path> RunReport::files() const {
    std::vector<fs::path> out{archive_csv, generations_csv, objectives_csv};
    out.insert(out.end(), traces.begin(), traces.end());
    out.insert(out.end(), svgs.begin(), svgs.end());
    out.insert(out.end(), checkpoints.begin(), checkpoints.end());
    out.push_back(report_json);
    return out;
}

fs::path default_out_dir() {
    if (const char* v = std::getenv(kOutDirEnv); v != nullptr && *v != '\0') return v;
    return "dcbleo-out";
}

namespace {

struct Averaged {
    Objectives reported{};
    std::vector<env::EpisodeLedger> ledgers;
};

Averaged average_ledgers(std::vector<env::EpisodeLedger> ledgers, const Scenario& sc) {
    Averaged a;
    for (const auto& l : ledgers) {
        const auto f = env::episode_objectives(l, sc.slots, sc.slot_duration);
        for (std::size_t i = 0; i < 3; ++i) a.reported[i] += f[i] / static_cast<double>(ledgers.size());
    }
    a.ledgers = std::move(ledgers);
    return a;
}

std::vector<double> per_slot_rates(const env::EpisodeLedger& l) {
    std::vector<double> r;
    for (const auto& s : l.trace) r.push_back(s.satellite == env::kIdle ? 0.0 : s.rate);
    return r;
}

std::string report_to_json(const RunReport& r, const fs::path& out_dir) {
    ojson j;
    j["seed"] = r.seed;
    j["wall_seconds"] = r.wall_seconds;
    j["archive_size"] = r.archive_size;
    j["policies"] = ojson::array();
    for (const auto& p : r.policies)
        j["policies"].push_back({{"name", p.name}, {"f1_bps", p.objectives[0]}, {"f2_j", p.objectives[1]},
                                 {"f3", p.objectives[2]}});
    j["files"] = ojson::array();
    for (const auto& f : r.files()) j["files"].push_back(fs::relative(f, out_dir).generic_string());
    return j.dump(2) + "\n";
}

}  // namespace

RunReport run_experiment(const Scenario& scenario, const ExperimentConfig& config, const fs::path& out_dir,
                         const emodrl::RunHooks& hooks) {
    const auto start = std::chrono::steady_clock::now();
    scenario.validate();
    config.emodrl.validate();
    std::vector<fs::path> written;
    auto record = [&](const fs::path& p) {
        written.push_back(p);
        return p;
    };
    try {
        fs::create_directories(out_dir / "policies");
        fs::create_directories(out_dir / "traces");
    } catch (const fs::filesystem_error& e) {
        throw IoError(fmt::format("cannot create output directory {}: {}", out_dir.string(), e.what()));
    }

    emodrl::RunHooks h = hooks;
    if (h.checkpoint_path.empty()) h.checkpoint_path = (out_dir / "run.ckpt").string();
    auto result = emodrl::run(scenario, config.emodrl, h);

    RunReport report;
    report.seed = scenario.seed;
    report.archive_size = result.archive.size();
    try {
        std::vector<ArchiveEntry> entries;
        for (std::size_t i = 0; i < result.archive.size(); ++i) {
            const auto& m = result.archive.members()[i];
            const auto rel = fmt::format("policies/policy_{:03d}.bin", i);
            save_policy(m.policy, out_dir / rel);
            report.checkpoints.push_back(record(out_dir / rel));
            entries.push_back({m.objectives, m.scores, m.weight, m.generation, rel});
        }
        report.archive_csv = record(out_dir / "archive.csv");
        write_archive_csv(report.archive_csv, entries);
        report.generations_csv = record(out_dir / "generations.csv");
        write_generations_csv(report.generations_csv, result.log);

        const auto seeds = emodrl::evaluation_seeds(scenario, config.emodrl.eval_episodes);
        std::vector<std::pair<std::string, Averaged>> rows;
        for (auto kind : {baselines::BaselineKind::Argp, baselines::BaselineKind::NonDcb,
                          baselines::BaselineKind::Random}) {
            env::Environment env(kind == baselines::BaselineKind::NonDcb ? baselines::non_dcb_scenario(scenario)
                                                                         : scenario);
            std::vector<env::EpisodeLedger> ledgers;
            for (auto seed : seeds) ledgers.push_back(baselines::run_episode(kind, env, seed));
            rows.emplace_back(std::string(baselines::to_string(kind)), average_ledgers(std::move(ledgers), scenario));
        }
        env::Environment env(scenario);
        for (auto t : kTendencies) {
            const auto idx = select_policy(entries, tendency_weight(t));
            auto eval = agent::evaluate_policy(result.archive.members()[idx].policy, env, seeds);
            rows.emplace_back(std::string(to_string(t)), average_ledgers(std::move(eval.ledgers), scenario));
        }

        std::string csv = "policy,f1_bps,f2_j,f3\n";
        for (const auto& [name, avg] : rows) {
            report.policies.push_back({name, avg.reported});
            csv += fmt::format("{},{},{},{}\n", name, avg.reported[0], avg.reported[1], avg.reported[2]);
            const auto trace = record(out_dir / "traces" / fmt::format("{}.csv", name));
            write_trace_csv(trace, avg.ledgers.front());
            report.traces.push_back(trace);
        }
        report.objectives_csv = record(out_dir / "objectives.csv");
        write_file(report.objectives_csv, csv);

        auto find = [&](std::string_view name) -> const Averaged& {
            for (const auto& [n, a] : rows)
                if (n == name) return a;
            throw StateError("missing policy row");
        };
        const std::vector<RateSeries> series{{"ARGP", per_slot_rates(find("argp").ledgers.front())},
                                             {"non-DCB", per_slot_rates(find("non-dcb").ledgers.front())},
                                             {"favor-rate", per_slot_rates(find("favor-rate").ledgers.front())}};
        const auto rate = record(out_dir / "rate.svg");
        write_file(rate, rate_svg(series, scenario.rate_threshold));
        std::vector<Objectives> front;
        for (const auto& e : entries) front.push_back(reported(e.objectives));
        const auto pareto = record(out_dir / "pareto.svg");
        write_file(pareto, pareto_svg(front));
        const auto bars = record(out_dir / "objectives.svg");
        write_file(bars, objectives_svg(report.policies));
        report.svgs = {rate, pareto, bars};

        report.report_json = out_dir / "report.json";
        report.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_file(report.report_json, report_to_json(report, out_dir));
    } catch (const std::exception& e) {
        ojson manifest = ojson::array();
        for (const auto& p : written)
            if (fs::exists(p)) manifest.push_back(fs::relative(p, out_dir).generic_string());
        std::ofstream(out_dir / "manifest.partial.json") << manifest.dump(2) << "\n";
        throw IoError(fmt::format("experiment output failed: {} (partial manifest in {})", e.what(),
                                  (out_dir / "manifest.partial.json").string()));
    }
    return report;
}

}  // namespace dcbleo::harness
