#include "comdp/io.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

#include "comdp/errors.hpp"

namespace comdp {

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out << text;
}

} // namespace

std::string instance_to_json(const Instance& inst) {
    json j;
    j["kind"] = to_string(kind_of(inst));
    if (const auto* k = std::get_if<KspInstance>(&inst)) {
        j["d"] = k->d;
        j["n"] = k->n;
        j["m"] = k->m;
        j["c"] = k->c;
        j["w"] = k->w;
        j["b"] = k->b;
    } else if (const auto* t = std::get_if<TspInstance>(&inst)) {
        j["d"] = t->d;
        j["c"] = t->c;
    } else {
        const auto& s = std::get<SppInstance>(inst);
        j["d"] = s.depth();
        j["c"] = s.c;
        j["vSrc"] = s.v_src;
        j["vTgt"] = s.v_tgt;
    }
    return j.dump(2);
}

Instance instance_from_json(const std::string& text) {
    json j = json::parse(text, nullptr, true, true);
    ProblemKind kind = problem_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
    case ProblemKind::Ksp: {
        KspInstance k;
        k.d = j.at("d").get<int>();
        k.n = j.at("n").get<int>();
        k.m = j.at("m").get<int>();
        k.c = j.at("c").get<std::vector<double>>();
        k.w = j.at("w").get<std::vector<std::vector<double>>>();
        k.b = j.at("b").get<std::vector<double>>();
        if (int(k.c.size()) != k.d || int(k.w.size()) != k.m || int(k.b.size()) != k.m)
            throw InputError("ksp json: inconsistent dimensions");
        for (const auto& row : k.w)
            if (int(row.size()) != k.d) throw InputError("ksp json: w row length != d");
        return k;
    }
    case ProblemKind::Tsp: {
        TspInstance t;
        t.d = j.at("d").get<int>();
        t.c = j.at("c").get<std::vector<std::vector<double>>>();
        if (int(t.c.size()) != t.d) throw InputError("tsp json: c must be d x d");
        for (const auto& row : t.c)
            if (int(row.size()) != t.d) throw InputError("tsp json: c must be d x d");
        return t;
    }
    case ProblemKind::Spp: {
        SppInstance s;
        s.vertex_count = j.at("d").get<int>() + 1;
        s.c = j.at("c").get<std::vector<std::vector<double>>>();
        s.v_src = j.at("vSrc").get<int>();
        s.v_tgt = j.at("vTgt").get<int>();
        if (int(s.c.size()) != s.vertex_count) throw InputError("spp json: c must be (d+1)^2");
        for (const auto& row : s.c)
            if (int(row.size()) != s.vertex_count) throw InputError("spp json: c must be (d+1)^2");
        if (s.v_src == s.v_tgt) throw InputError("spp json: vSrc must differ from vTgt");
        return s;
    }
    }
    throw InputError("instance json: bad kind");
}

void write_instance(const std::string& path, const Instance& inst) {
    spit(path, instance_to_json(inst) + "\n");
}

Instance read_instance(const std::string& path) { return instance_from_json(slurp(path)); }

namespace {

constexpr char kMagic[8] = {'C', 'O', 'M', 'D', 'P', 'B', '0', '1'};

template <typename T> void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> T get(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw InputError("mdp file: truncated");
    return v;
}

template <typename T> void put_vec(std::ofstream& out, const std::vector<T>& v) {
    put<std::uint64_t>(out, v.size());
    out.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(T)));
}

template <typename T> std::vector<T> get_vec(std::ifstream& in) {
    auto n = get<std::uint64_t>(in);
    std::vector<T> v(n);
    in.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(T)));
    if (!in) throw InputError("mdp file: truncated");
    return v;
}

void put_label(std::ofstream& out, const StateLabel& label) {
    put<std::uint8_t>(out, std::uint8_t(label.tag));
    put<std::int32_t>(out, label.layer);
    put<std::int32_t>(out, label.last);
    put<std::uint64_t>(out, label.city_set);
    put_vec(out, label.caps);
}

StateLabel get_label(std::ifstream& in) {
    StateLabel label;
    label.tag = StateLabel::Tag(get<std::uint8_t>(in));
    label.layer = get<std::int32_t>(in);
    label.last = get<std::int32_t>(in);
    label.city_set = get<std::uint64_t>(in);
    label.caps = get_vec<std::int64_t>(in);
    return label;
}

} // namespace

void write_mdp(const std::string& path, const Mdp& mdp, const Instance& inst) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(out, 1); // format version
    put<std::uint32_t>(out, std::uint32_t(mdp.kind));
    put<std::int32_t>(out, mdp.action_count);
    put<std::int32_t>(out, mdp.depth);
    put<std::int32_t>(out, mdp.state_count());
    put<std::int32_t>(out, mdp.initial_state);
    put<std::int32_t>(out, mdp.absorbing_state);
    put<double>(out, mdp.penalty);
    put_vec(out, mdp.layer_of);
    put_vec(out, mdp.is_final);
    put_vec(out, mdp.transition);
    put_vec(out, mdp.reward);
    for (const StateLabel& label : mdp.labels) put_label(out, label);

    std::string inst_json = instance_to_json(inst);
    put<std::uint64_t>(out, inst_json.size());
    out.write(inst_json.data(), std::streamsize(inst_json.size()));
}

MdpFile read_mdp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw InputError("mdp file: bad magic bytes");
    if (get<std::uint32_t>(in) != 1) throw InputError("mdp file: unsupported version");

    MdpFile file;
    Mdp& mdp = file.mdp;
    mdp.kind = ProblemKind(get<std::uint32_t>(in));
    mdp.action_count = get<std::int32_t>(in);
    mdp.depth = get<std::int32_t>(in);
    int n = get<std::int32_t>(in);
    mdp.initial_state = get<std::int32_t>(in);
    mdp.absorbing_state = get<std::int32_t>(in);
    mdp.penalty = get<double>(in);
    mdp.layer_of = get_vec<int>(in);
    mdp.is_final = get_vec<std::uint8_t>(in);
    mdp.transition = get_vec<int>(in);
    mdp.reward = get_vec<double>(in);
    mdp.labels.reserve(n);
    for (int s = 0; s < n; ++s) mdp.labels.push_back(get_label(in));

    mdp.layers.assign(mdp.depth + 1, {});
    for (int s = 0; s < n; ++s) {
        if (s == mdp.absorbing_state) continue;
        mdp.layers[mdp.layer_of[s]].push_back(s);
    }
    for (int s = 0; s < n; ++s) mdp.label_index.emplace(mdp.labels[s].str(), s);

    auto json_len = get<std::uint64_t>(in);
    std::string inst_json(json_len, '\0');
    in.read(inst_json.data(), std::streamsize(json_len));
    if (!in) throw InputError("mdp file: truncated instance payload");
    file.instance = instance_from_json(inst_json);
    return file;
}

void write_value(const std::string& path, const ValueFunction& v) {
    json j = v.values;
    spit(path, j.dump() + "\n");
}

ValueFunction read_value(const std::string& path) {
    json j = json::parse(slurp(path));
    ValueFunction v;
    v.values = j.get<std::vector<double>>();
    return v;
}

std::string report_to_json(const ValidationReport& report) {
    json checks = json::array();
    for (const CheckResult& c : report.checks)
        checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    json j{{"pass", report.all_pass()}, {"checks", checks}};
    return j.dump(2);
}

void write_report(const std::string& path, const ValidationReport& report) {
    spit(path, report_to_json(report) + "\n");
}

std::string transcript_to_json(const Mdp& mdp, const DecodeTranscript& transcript,
                               const Solution& solution) {
    json steps = json::array();
    for (const DecodeStep& st : transcript.steps)
        steps.push_back({{"state", st.state},
                         {"action", st.action},
                         {"reward", st.reward},
                         {"next", st.next_state}});
    json j{{"steps", steps},
           {"tokens", transcript.tokens},
           {"terminalState", transcript.terminal_state},
           {"terminalLabel", mdp.labels[transcript.terminal_state].str()},
           {"terminatingAction", transcript.terminating_action},
           {"solutionTokens", solution.tokens},
           {"feasible", solution.feasible()}};
    if (solution.feasible()) j["objective"] = *solution.objective;
    return j.dump(2);
}

void write_transcript(const std::string& path, const Mdp& mdp, const DecodeTranscript& transcript,
                      const Solution& solution) {
    spit(path, transcript_to_json(mdp, transcript, solution) + "\n");
}

} // namespace comdp
