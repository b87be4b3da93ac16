#include "mfgp/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mfgp/error.hpp"

namespace mfgp {

namespace {

    using json = nlohmann::json;

    template <typename T>
    T get_as(const json& j, const std::string& field)
    {
        try {
            return j.get<T>();
        } catch (const json::exception&) {
            throw ValidationError(field, "has the wrong type");
        }
    }

    int get_int(const json& j, const std::string& field)
    {
        if (!j.is_number_integer())
            throw ValidationError(field, "must be an integer");
        return j.get<int>();
    }

    double get_number(const json& j, const std::string& field)
    {
        if (!j.is_number())
            throw ValidationError(field, "must be a number");
        return j.get<double>();
    }

    bool get_bool(const json& j, const std::string& field)
    {
        if (!j.is_boolean())
            throw ValidationError(field, "must be true or false");
        return j.get<bool>();
    }

    void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& prefix)
    {
        for (auto it = obj.begin(); it != obj.end(); ++it)
            if (!allowed.count(it.key()))
                throw ValidationError(prefix + it.key(), "unknown key");
    }

    MethodSpec parse_method(const json& j, const std::string& field)
    {
        if (j.is_string()) {
            try {
                return MethodSpec::named(j.get<std::string>());
            } catch (const InvalidArgument& e) {
                throw ValidationError(field, e.what());
            }
        }
        if (!j.is_object())
            throw ValidationError(field, "must be a method id or an object");
        reject_unknown(j, {"id", "method", "num_delays", "delay_step", "include_t", "include_fl", "fixed_rho"},
                       field + ".");
        if (!j.contains("id") || !j["id"].is_string())
            throw ValidationError(field + ".id", "must be a string");
        const std::string id = j["id"].get<std::string>();

        const auto known = MethodSpec::known_ids();
        MethodSpec s = std::find(known.begin(), known.end(), id) != known.end()
                           ? MethodSpec::named(id)
                           : MethodSpec::gpe(id, {0, 0.0, true, true});
        if (j.contains("method")) {
            const std::string m = get_as<std::string>(j["method"], field + ".method");
            if (m == "kriging" || m == "ar1") {
                s.method = m == "kriging" ? Method::Kriging : Method::Ar1;
                s.embedding = {0, 0.0, true, false};
            } else if (m == "nargp") {
                s.method = Method::Nargp;
                s.embedding = {0, 0.0, true, true};
            } else if (m == "gpe") {
                s.method = Method::Gpe;
            } else {
                throw ValidationError(field + ".method", "unknown method '" + m + "'");
            }
        }
        const bool embeds = s.method == Method::Gpe;
        for (const char* key : {"num_delays", "delay_step", "include_t", "include_fl"})
            if (j.contains(key) && !embeds)
                throw ValidationError(field + "." + key, "only applies to embedding methods");
        if (j.contains("num_delays"))
            s.embedding.num_delays = get_int(j["num_delays"], field + ".num_delays");
        if (j.contains("delay_step"))
            s.embedding.delay_step = get_number(j["delay_step"], field + ".delay_step");
        if (j.contains("include_t"))
            s.embedding.include_t = get_bool(j["include_t"], field + ".include_t");
        if (j.contains("include_fl"))
            s.embedding.include_fl = get_bool(j["include_fl"], field + ".include_fl");
        if (j.contains("fixed_rho")) {
            if (s.method != Method::Ar1)
                throw ValidationError(field + ".fixed_rho", "only applies to ar1");
            s.fixed_rho = get_number(j["fixed_rho"], field + ".fixed_rho");
        }
        if (s.embedding.num_delays < 0)
            throw ValidationError(field + ".num_delays", "must be >= 0");
        if (j.contains("delay_step") && !(s.embedding.delay_step > 0.0))
            throw ValidationError(field + ".delay_step", "must be > 0");
        if (s.embedding.dimension() == 0)
            throw ValidationError(field, "embedding selects no columns");
        return s;
    }

} // namespace

std::vector<MethodSpec> default_methods(const std::string& benchmark)
{
    std::vector<std::string> ids;
    if (benchmark == "simple")
        ids = {"kriging", "gp_fl"};
    else if (benchmark == "embed_demo")
        ids = {"kriging", "nargp", "delays1"};
    else if (benchmark == "phase_shift")
        ids = {"kriging", "ar1", "nargp", "delays", "gpe"};
    else
        ids = {"kriging", "ar1", "nargp", "gpe", "gpe2"};
    std::vector<MethodSpec> out;
    for (const auto& id : ids)
        out.push_back(MethodSpec::named(id));
    return out;
}

ExperimentConfig default_config(const std::string& name)
{
    const BenchmarkPair b = benchmark(name);
    ExperimentConfig c;
    c.benchmark = name;
    c.methods = default_methods(name);
    c.n_low = b.default_n_low;
    if (name == "simple" || name == "embed_demo")
        c.n_high = {b.default_n_high};
    else if (name == "hodgkin_huxley")
        c.n_high = {20, 25, 30, 35};
    else
        c.n_high = {10, 15, 20, 25};
    return c;
}

ExperimentConfig parse_config_text(std::string_view text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError("<document>", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object())
        throw ValidationError("<document>", "must be a JSON object");
    reject_unknown(j,
                   {"benchmark", "methods", "n_high", "n_low", "n_trials", "n_test", "seed", "analytic_lowfi",
                    "delay_step", "restarts", "ar1_restarts", "noise_variance", "lowfi_noise_variance",
                    "hh_window",
                    "record_wall_time"},
                   "");
    if (!j.contains("benchmark") || !j["benchmark"].is_string())
        throw ValidationError("benchmark", "must be a string");
    const std::string name = j["benchmark"].get<std::string>();
    const auto names = benchmark_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
        throw ValidationError("benchmark", "unknown benchmark '" + name + "'");

    ExperimentConfig c = default_config(name);
    if (j.contains("methods")) {
        if (!j["methods"].is_array())
            throw ValidationError("methods", "must be an array");
        c.methods.clear();
        for (std::size_t i = 0; i < j["methods"].size(); ++i)
            c.methods.push_back(parse_method(j["methods"][i], "methods[" + std::to_string(i) + "]"));
    }
    if (j.contains("n_high")) {
        if (!j["n_high"].is_array())
            throw ValidationError("n_high", "must be an array of integers");
        c.n_high.clear();
        for (const json& v : j["n_high"])
            c.n_high.push_back(get_int(v, "n_high"));
    }
    if (j.contains("n_low"))
        c.n_low = get_int(j["n_low"], "n_low");
    if (j.contains("n_trials"))
        c.n_trials = get_int(j["n_trials"], "n_trials");
    if (j.contains("n_test"))
        c.n_test = get_int(j["n_test"], "n_test");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned())
            throw ValidationError("seed", "must be a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("analytic_lowfi"))
        c.analytic_lowfi = get_bool(j["analytic_lowfi"], "analytic_lowfi");
    if (j.contains("delay_step"))
        c.delay_step = get_number(j["delay_step"], "delay_step");
    if (j.contains("restarts"))
        c.restarts = get_int(j["restarts"], "restarts");
    if (j.contains("ar1_restarts"))
        c.ar1_restarts = get_int(j["ar1_restarts"], "ar1_restarts");
    for (auto [key, field] : {std::pair{"noise_variance", &c.noise_variance},
                              std::pair{"lowfi_noise_variance", &c.lowfi_noise_variance}}) {
        if (!j.contains(key))
            continue;
        if (j[key].is_null())
            field->reset();
        else
            *field = get_number(j[key], key);
    }
    if (j.contains("record_wall_time"))
        c.record_wall_time = get_bool(j["record_wall_time"], "record_wall_time");
    if (j.contains("hh_window")) {
        const json& w = j["hh_window"];
        if (!w.is_object())
            throw ValidationError("hh_window", "must be an object");
        reject_unknown(w, {"start", "length", "dt", "i_ext_high", "i_ext_low"}, "hh_window.");
        if (w.contains("start"))
            c.hh_window.start = get_number(w["start"], "hh_window.start");
        if (w.contains("length"))
            c.hh_window.length = get_number(w["length"], "hh_window.length");
        if (w.contains("dt"))
            c.hh_window.dt = get_number(w["dt"], "hh_window.dt");
        if (w.contains("i_ext_high"))
            c.hh_window.i_ext_high = get_number(w["i_ext_high"], "hh_window.i_ext_high");
        if (w.contains("i_ext_low"))
            c.hh_window.i_ext_low = get_number(w["i_ext_low"], "hh_window.i_ext_low");
    }
    c.validate();
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot read config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

} // namespace mfgp
