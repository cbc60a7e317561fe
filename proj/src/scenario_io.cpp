#include "etcsim/scenario_io.hpp"

#include "etcsim/errors.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace etcsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ParseError("scenario field '" + field + "': " + what);
}

double get_number(const json& j, const std::string& field) {
    if (!j.is_number()) fail(field, "expected a number");
    return j.get<double>();
}

Eigen::VectorXd get_gain_vector(const json& j, const std::string& field, int n) {
    if (j.is_number()) return Eigen::VectorXd::Constant(n, j.get<double>());
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        fail(field, "expected a number or an array of length n");
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = get_number(j[static_cast<std::size_t>(i)], field);
    return v;
}

WeightedDigraph parse_graph(const json& j) {
    if (!j.is_object()) fail("graph", "expected an object");
    if (j.contains("laplacian")) {
        const json& rows = j.at("laplacian");
        if (!rows.is_array() || rows.empty()) fail("graph.laplacian", "expected a matrix");
        const int n = static_cast<int>(rows.size());
        Eigen::MatrixXd L(n, n);
        for (int r = 0; r < n; ++r) {
            const json& row = rows[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<int>(row.size()) != n)
                fail("graph.laplacian", "row " + std::to_string(r + 1) + " has wrong length");
            for (int c = 0; c < n; ++c)
                L(r, c) = get_number(row[static_cast<std::size_t>(c)], "graph.laplacian");
        }
        return WeightedDigraph::from_laplacian(L);
    }
    if (!j.contains("n")) fail("graph.n", "missing agent count");
    const int n = j.at("n").get<int>();
    if (n < 1) fail("graph.n", "agent count must be positive");
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    if (j.contains("edges")) {
        const json& edges = j.at("edges");
        if (!edges.is_array()) fail("graph.edges", "expected an array of [from, to, weight]");
        for (std::size_t k = 0; k < edges.size(); ++k) {
            const json& e = edges[k];
            const std::string field = "graph.edges[" + std::to_string(k) + "]";
            if (!e.is_array() || e.size() != 3) fail(field, "expected [from, to, weight]");
            const int from = e[0].get<int>();
            const int to = e[1].get<int>();
            const double w = get_number(e[2], field);
            if (from < 1 || from > n || to < 1 || to > n)
                fail(field, "agent index out of range 1.." + std::to_string(n));
            a(to - 1, from - 1) = w;  // a_{to,from}
        }
    }
    return WeightedDigraph(std::move(a));
}

OutputFunction parse_output(const json& j, int p) {
    std::string kind;
    double h = 0.0;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "identity") {
            kind = "identity";
        } else if (s.rfind("saturation(", 0) == 0 && s.back() == ')') {
            kind = "saturation";
            h = std::strtod(s.c_str() + 11, nullptr);
        } else {
            fail("output", "unknown tag '" + s + "'");
        }
    } else if (j.is_object()) {
        if (!j.contains("kind")) fail("output.kind", "missing");
        kind = j.at("kind").get<std::string>();
        if (j.contains("h")) h = get_number(j.at("h"), "output.h");
    } else {
        fail("output", "expected a tag string or an object");
    }
    if (kind == "identity") return OutputFunction::identity(p);
    if (kind == "saturation") {
        if (!(h > 0.0)) fail("output.h", "saturation needs h > 0");
        return OutputFunction::saturation(p, h);
    }
    fail("output.kind", "unknown kind '" + kind + "'");
}

Eigen::MatrixXd parse_x0(const json& j, int n) {
    if (!j.is_array() || static_cast<int>(j.size()) != n)
        fail("x0", "expected one entry per agent");
    const bool nested = j.front().is_array();
    const int p = nested ? static_cast<int>(j.front().size()) : 1;
    if (p < 1) fail("x0", "state dimension must be positive");
    Eigen::MatrixXd x0(n, p);
    for (int i = 0; i < n; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (nested) {
            if (!row.is_array() || static_cast<int>(row.size()) != p)
                fail("x0", "row " + std::to_string(i + 1) + " has wrong length");
            for (int l = 0; l < p; ++l)
                x0(i, l) = get_number(row[static_cast<std::size_t>(l)], "x0");
        } else {
            x0(i, 0) = get_number(row, "x0");
        }
    }
    return x0;
}

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

}  // namespace

ScenarioFile parse_scenario(const json& j) {
    if (!j.is_object()) throw ParseError("scenario file must contain a JSON object");
    for (const char* required : {"graph", "x0", "alpha", "beta", "horizon"})
        if (!j.contains(required)) fail(required, "missing");

    WeightedDigraph graph = parse_graph(j.at("graph"));
    const int n = graph.size();
    Eigen::MatrixXd x0 = parse_x0(j.at("x0"), n);
    const int p = static_cast<int>(x0.cols());

    OutputFunction output = j.contains("output") ? parse_output(j.at("output"), p)
                                                 : OutputFunction::identity(p);

    ScenarioFile f{
        j.value("name", std::string("scenario")),
        Scenario{std::move(graph), std::move(output), std::move(x0),
                 get_gain_vector(j.at("alpha"), "alpha", n),
                 get_gain_vector(j.at("beta"), "beta", n),
                 get_number(j.at("horizon"), "horizon")},
        RunOptions{},
        5e-2};

    if (j.contains("stride")) f.options.stride = get_number(j.at("stride"), "stride");
    if (!(f.options.stride > 0.0)) fail("stride", "must be positive");
    if (j.contains("threshold_floor"))
        f.options.threshold_floor = get_number(j.at("threshold_floor"), "threshold_floor");
    if (j.contains("max_events_per_agent"))
        f.options.max_events_per_agent = j.at("max_events_per_agent").get<std::size_t>();
    if (j.contains("record_segments"))
        f.options.record_segments = j.at("record_segments").get<bool>();
    if (j.contains("consensus_epsilon"))
        f.consensus_epsilon = get_number(j.at("consensus_epsilon"), "consensus_epsilon");

    f.scenario.validate();
    return f;
}

ScenarioFile load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    json j;
    try {
        j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        throw ParseError("scenario file '" + path + "': " + e.what());
    }
    return parse_scenario(j);
}

json to_json(const ScenarioFile& f) {
    const Scenario& s = f.scenario;
    json j;
    j["name"] = f.name;

    json edges = json::array();
    const Eigen::MatrixXd& a = s.graph.weights();
    for (int from = 0; from < s.graph.size(); ++from)
        for (int to = 0; to < s.graph.size(); ++to)
            if (a(to, from) > 0.0) edges.push_back({from + 1, to + 1, a(to, from)});
    j["graph"] = {{"n", s.graph.size()}, {"edges", std::move(edges)}};

    switch (s.output.kind()) {
        case OutputKind::Identity:
            j["output"] = {{"kind", "identity"}};
            break;
        case OutputKind::Saturation:
            j["output"] = {{"kind", "saturation"}, {"h", s.output.h()}};
            break;
        case OutputKind::Custom:
            throw ValidationError("custom outputs cannot be written to scenario files");
    }

    json x0 = json::array();
    for (int i = 0; i < s.x0.rows(); ++i) {
        json row = json::array();
        for (int l = 0; l < s.x0.cols(); ++l) row.push_back(s.x0(i, l));
        x0.push_back(std::move(row));
    }
    j["x0"] = std::move(x0);
    j["alpha"] = std::vector<double>(s.alpha.data(), s.alpha.data() + s.alpha.size());
    j["beta"] = std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size());
    j["horizon"] = s.horizon;
    j["stride"] = f.options.stride;
    j["threshold_floor"] = f.options.threshold_floor;
    j["max_events_per_agent"] = f.options.max_events_per_agent;
    j["consensus_epsilon"] = f.consensus_epsilon;
    return j;
}

void save_scenario(const std::string& path, const ScenarioFile& f) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write scenario file '" + path + "'");
    out << to_json(f).dump(2) << "\n";
}

std::uint64_t scenario_hash(const ScenarioFile& f) {
    const std::string canon = to_json(f).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_trajectory_csv(const std::string& path, const SimulationRecord& record) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    if (record.samples.empty()) return;
    const auto& first = record.samples.front();
    out << "t";
    for (int i = 0; i < first.x.rows(); ++i)
        for (int l = 0; l < first.x.cols(); ++l) out << ",x_" << i + 1 << "_" << l + 1;
    out << "\n";
    for (const auto& smp : record.samples) {
        out << format_double(smp.t);
        for (int i = 0; i < smp.x.rows(); ++i)
            for (int l = 0; l < smp.x.cols(); ++l) out << "," << format_double(smp.x(i, l));
        out << "\n";
    }
}

void write_events_csv(const std::string& path, const SimulationRecord& record) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << "agent,k,t\n";
    for (std::size_t i = 0; i < record.events.size(); ++i)
        for (std::size_t k = 0; k < record.events[i].size(); ++k)
            out << i + 1 << "," << k + 1 << "," << format_double(record.events[i][k]) << "\n";
}

void write_lyapunov_csv(const std::string& path, const LyapunovSeries& series) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    const bool two_block = !series.Wr.empty();
    out << (two_block ? "t,V1,V2,Wr\n" : "t,V,W\n");
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        out << format_double(series.times[k]);
        if (two_block) {
            out << "," << format_double(series.V1[k]) << "," << format_double(series.V2[k])
                << "," << format_double(series.Wr[k]);
        } else {
            out << "," << format_double(series.V[k]) << "," << format_double(series.W[k]);
        }
        out << "\n";
    }
}

void write_summary_json(const std::string& path, const ScenarioFile& f,
                        const RunSummary& summary) {
    json j;
    j["name"] = f.name;
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << scenario_hash(f);
    j["scenario_hash"] = hash.str();
    j["horizon"] = f.scenario.horizon;

    const ConsensusVerdict& v = summary.verdict;
    j["consensus"] = {
        {"achieved", v.achieved},
        {"value", std::vector<double>(v.consensus_value.data(),
                                      v.consensus_value.data() + v.consensus_value.size())},
        {"terminal_spread", v.terminal_spread},
        {"epsilon", v.epsilon},
        {"sufficient_condition_holds", v.sufficient_condition_holds},
        {"necessary_applicable", v.necessary_applicable},
        {"necessary_condition_holds", v.necessary_condition_holds},
    };

    json agents = json::array();
    for (std::size_t i = 0; i < summary.event_counts.size(); ++i) {
        json a;
        a["agent"] = i + 1;
        a["event_count"] = summary.event_counts[i];
        if (summary.min_inter_event_times[i])
            a["min_inter_event"] = *summary.min_inter_event_times[i];
        else
            a["min_inter_event"] = nullptr;
        // The trigger condition held from the last event through the horizon,
        // so no further events were emitted for this agent.
        a["last_event_time"] = summary.last_event_times[i];
        a["quiet_through_horizon"] = true;
        agents.push_back(std::move(a));
    }
    j["agents"] = std::move(agents);
    j["conservation_residual"] = summary.conservation_resid;
    j["compliance_margin"] = summary.compliance;

    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

}  // namespace etcsim
