#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "dmimo/harness.hpp"
#include "json.hpp"

namespace dmimo {

namespace {

using json = nlohmann::json;

std::size_t as_count(const json& v, const std::string& key)
{
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw std::invalid_argument("config key '" + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
}

double as_real(const json& v, const std::string& key)
{
    if (!v.is_number())
        throw std::invalid_argument("config key '" + key + "' must be a number");
    return v.get<double>();
}

bool as_bool(const json& v, const std::string& key)
{
    if (!v.is_boolean())
        throw std::invalid_argument("config key '" + key + "' must be true or false");
    return v.get<bool>();
}

std::string as_string(const json& v, const std::string& key)
{
    if (!v.is_string())
        throw std::invalid_argument("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

using Setter = std::function<void(const json&, const std::string&, ExperimentSpec&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"area_side_m", [](auto& v, auto& k, auto& s) { s.base.area_side_m = as_real(v, k); }},
        {"num_aps", [](auto& v, auto& k, auto& s) { s.base.num_aps = as_count(v, k); }},
        {"num_ues", [](auto& v, auto& k, auto& s) { s.base.num_ues = as_count(v, k); }},
        {"antennas_per_ap", [](auto& v, auto& k, auto& s) { s.base.antennas_per_ap = as_count(v, k); }},
        {"bandwidth_hz", [](auto& v, auto& k, auto& s) { s.base.bandwidth_hz = as_real(v, k); }},
        {"coherence_block", [](auto& v, auto& k, auto& s) { s.base.coherence_block = as_count(v, k); }},
        {"pilot_length", [](auto& v, auto& k, auto& s) { s.base.pilot_length = as_count(v, k); }},
        {"shadow_sigma_db", [](auto& v, auto& k, auto& s) { s.base.shadow_sigma_db = as_real(v, k); }},
        {"assoc_threshold", [](auto& v, auto& k, auto& s) { s.base.assoc_threshold = as_real(v, k); }},
        {"strong_threshold", [](auto& v, auto& k, auto& s) { s.base.strong_threshold = as_real(v, k); }},
        {"tx_power_mw", [](auto& v, auto& k, auto& s) { s.base.tx_power_mw = as_real(v, k); }},
        {"noise_figure_db", [](auto& v, auto& k, auto& s) { s.base.noise_figure_db = as_real(v, k); }},
        {"wrap_around", [](auto& v, auto& k, auto& s) { s.base.wrap_around = as_bool(v, k); }},
        {"pl_reference_loss_db", [](auto& v, auto& k, auto& s) { s.base.pathloss.reference_loss_db = as_real(v, k); }},
        {"pl_d0_m", [](auto& v, auto& k, auto& s) { s.base.pathloss.d0_m = as_real(v, k); }},
        {"pl_d1_m", [](auto& v, auto& k, auto& s) { s.base.pathloss.d1_m = as_real(v, k); }},
        {"pl_exponent_mid", [](auto& v, auto& k, auto& s) { s.base.pathloss.exponent_mid = as_real(v, k); }},
        {"pl_exponent_far", [](auto& v, auto& k, auto& s) { s.base.pathloss.exponent_far = as_real(v, k); }},
        {"pl_min_distance_m", [](auto& v, auto& k, auto& s) { s.base.pathloss.min_distance_m = as_real(v, k); }},
        {"scheme_id", [](auto& v, auto& k, auto& s) { s.schemes = {parse_scheme(as_string(v, k))}; }},
        {"dpb_S", [](auto& v, auto& k, auto& s) { s.scheme.dpb_S = as_count(v, k); }},
        {"dpb_delta", [](auto& v, auto& k, auto& s) { s.scheme.dpb_delta = as_real(v, k); }},
        {"tie_rule", [](auto& v, auto& k, auto& s) { s.scheme.tie_rule = parse_tie_rule(as_string(v, k)); }},
        {"seed", [](auto& v, auto& k, auto& s) { s.scheme.seed = as_count(v, k); }},
        {"lsfd", [](auto& v, auto& k, auto& s) {
             const std::string mode = as_string(v, k);
             if (mode == "optimal")
                 s.lsfd = LsfdMode::Optimal;
             else if (mode == "equal")
                 s.lsfd = LsfdMode::Equal;
             else
                 throw std::invalid_argument("config key 'lsfd' must be \"optimal\" or \"equal\"");
         }},
        {"schemes", [](auto& v, auto& k, auto& s) {
             if (!v.is_array())
                 throw std::invalid_argument("config key '" + k + "' must be an array of names");
             s.schemes.clear();
             for (const auto& item : v)
                 s.schemes.push_back(parse_scheme(as_string(item, k)));
         }},
        {"sweep", [](auto& v, auto& k, auto& s) { s.sweep = parse_sweep(as_string(v, k)); }},
        {"sweep_values", [](auto& v, auto& k, auto& s) {
             if (!v.is_array())
                 throw std::invalid_argument("config key '" + k + "' must be an array of numbers");
             s.sweep_values.clear();
             for (const auto& item : v)
                 s.sweep_values.push_back(as_real(item, k));
         }},
        {"num_drops", [](auto& v, auto& k, auto& s) { s.num_drops = as_count(v, k); }},
        {"master_seed", [](auto& v, auto& k, auto& s) { s.master_seed = as_count(v, k); }},
    };
    return table;
}

} // namespace

void apply_config_json(const std::string& json_text, ExperimentSpec& spec)
{
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw std::invalid_argument("config must be a flat JSON object");

    // Apply onto a copy so a bad document leaves `spec` untouched.
    ExperimentSpec updated = spec;
    for (const auto& [key, value] : doc.items()) {
        const auto it = setters().find(key);
        if (it == setters().end())
            throw std::invalid_argument("unknown config key '" + key + "'");
        if (value.is_object())
            throw std::invalid_argument("config key '" + key + "' must not be nested");
        it->second(value, key, updated);
    }
    spec = std::move(updated);
}

void apply_config_file(const std::filesystem::path& path, ExperimentSpec& spec)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config file " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    apply_config_json(text.str(), spec);
}

std::string config_to_json(const ExperimentSpec& spec)
{
    const NetworkConfig& c = spec.base;
    json doc = {
        {"area_side_m", c.area_side_m},
        {"num_aps", c.num_aps},
        {"num_ues", c.num_ues},
        {"antennas_per_ap", c.antennas_per_ap},
        {"bandwidth_hz", c.bandwidth_hz},
        {"coherence_block", c.coherence_block},
        {"pilot_length", c.pilot_length},
        {"shadow_sigma_db", c.shadow_sigma_db},
        {"assoc_threshold", c.assoc_threshold},
        {"strong_threshold", c.strong_threshold},
        {"tx_power_mw", c.tx_power_mw},
        {"noise_figure_db", c.noise_figure_db},
        {"wrap_around", c.wrap_around},
        {"pl_reference_loss_db", c.pathloss.reference_loss_db},
        {"pl_d0_m", c.pathloss.d0_m},
        {"pl_d1_m", c.pathloss.d1_m},
        {"pl_exponent_mid", c.pathloss.exponent_mid},
        {"pl_exponent_far", c.pathloss.exponent_far},
        {"pl_min_distance_m", c.pathloss.min_distance_m},
        {"dpb_S", spec.scheme.dpb_S},
        {"dpb_delta", spec.scheme.dpb_delta},
        {"tie_rule", std::string(to_string(spec.scheme.tie_rule))},
        {"seed", spec.scheme.seed},
        {"lsfd", spec.lsfd == LsfdMode::Optimal ? "optimal" : "equal"},
        {"sweep", std::string(to_string(spec.sweep))},
        {"sweep_values", spec.sweep_values},
        {"num_drops", spec.num_drops},
        {"master_seed", spec.master_seed},
    };
    json names = json::array();
    for (SchemeId id : spec.schemes)
        names.push_back(std::string(to_string(id)));
    doc["schemes"] = names;
    return doc.dump(2);
}

void apply_desk_scale(ExperimentSpec& spec)
{
    spec.base.num_aps = 30;
    spec.base.num_ues = 50;
    spec.num_drops = 50;
}

std::vector<double> default_sweep_values(SweepKind sweep, bool desk_scale)
{
    switch (sweep) {
    case SweepKind::UeCount:
        return desk_scale ? std::vector<double>{30, 40, 50, 60}
                          : std::vector<double>{50, 60, 70, 80, 90, 100};
    case SweepKind::PilotLength:
        return desk_scale ? std::vector<double>{3, 5, 7, 9, 11}
                          : std::vector<double>{3, 5, 7, 9, 11, 13, 15};
    case SweepKind::AssocThreshold:
        return desk_scale ? std::vector<double>{0.8, 0.9, 0.95, 1.0}
                          : std::vector<double>{0.75, 0.8, 0.85, 0.9, 0.95, 0.99, 1.0};
    case SweepKind::None:
        return {};
    }
    return {};
}

std::string_view build_version()
{
    return DMIMO_GIT_DESCRIBE;
}

} // namespace dmimo
