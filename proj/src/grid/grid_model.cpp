#include "vip/grid/grid_model.hpp"

#include <fstream>
#include <numeric>

#include "vip/common/error.hpp"

namespace vip::grid {

namespace {

template <typename T>
std::size_t find_by_id(const std::vector<T>& items, std::string_view id, const char* what) {
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].id == id) return i;
    }
    throw Error(ErrorCode::UnknownElement, std::string(what) + " '" + std::string(id) + "'");
}

bool connected_without(const GridModel& m, std::optional<std::size_t> skip) {
    const std::size_t n = m.buses.size();
    if (n == 0) return true;
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto root = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (std::size_t k = 0; k < m.branches.size(); ++k) {
        const auto& br = m.branches[k];
        if (!br.in_service || (skip && *skip == k)) continue;
        parent[root(br.from)] = root(br.to);
    }
    const auto r0 = root(0);
    for (std::size_t i = 1; i < n; ++i) {
        if (root(i) != r0) return false;
    }
    return true;
}

Region region_from(const std::string& s) {
    if (s == "North") return Region::North;
    if (s == "C1") return Region::C1;
    if (s == "C2") return Region::C2;
    if (s == "C3") return Region::C3;
    throw Error(ErrorCode::InvalidModel, "unknown region '" + s + "'");
}

BusKind bus_kind_from(const std::string& s) {
    if (s == "slack") return BusKind::Slack;
    if (s == "pv") return BusKind::PV;
    if (s == "pq") return BusKind::PQ;
    throw Error(ErrorCode::InvalidModel, "unknown bus kind '" + s + "'");
}

const char* to_json_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::PV: return "pv";
        case BusKind::PQ: return "pq";
    }
    return "pq";
}

}  // namespace

std::size_t GridModel::bus_index(std::string_view id) const { return find_by_id(buses, id, "bus"); }
std::size_t GridModel::branch_index(std::string_view id) const { return find_by_id(branches, id, "branch"); }
std::size_t GridModel::generator_index(std::string_view id) const {
    return find_by_id(generators, id, "generator");
}

std::size_t GridModel::slack_bus() const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].kind == BusKind::Slack) return i;
    }
    throw Error(ErrorCode::InvalidModel, "no slack bus");
}

std::size_t GridModel::in_service_branch_count() const {
    std::size_t n = 0;
    for (const auto& b : branches) n += b.in_service ? 1 : 0;
    return n;
}

std::vector<std::size_t> GridModel::oltc_branches() const {
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < branches.size(); ++k) {
        if (branches[k].kind == BranchKind::OltcTransformer) out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> GridModel::oltc_load_index() const {
    std::vector<std::size_t> out;
    for (auto k : oltc_branches()) {
        std::optional<std::size_t> found;
        for (std::size_t l = 0; l < loads.size(); ++l) {
            if (loads[l].bus == branches[k].to) found = l;
        }
        if (!found) throw Error(ErrorCode::InvalidModel, "OLTC " + branches[k].id + " feeds no load");
        out.push_back(*found);
    }
    return out;
}

bool GridModel::connected() const { return connected_without(*this, std::nullopt); }

void GridModel::validate() const {
    if (buses.empty()) throw Error(ErrorCode::InvalidModel, "no buses");
    std::size_t slack = 0;
    for (const auto& b : buses) slack += b.kind == BusKind::Slack ? 1 : 0;
    if (slack != 1) throw Error(ErrorCode::InvalidModel, "expected exactly one slack bus");
    for (const auto& br : branches) {
        if (br.from >= buses.size() || br.to >= buses.size() || br.from == br.to) {
            throw Error(ErrorCode::InvalidModel, "branch " + br.id + " has invalid endpoints");
        }
        if (!(br.x > 0.0)) throw Error(ErrorCode::InvalidModel, "branch " + br.id + " needs x > 0");
        if (br.r < 0.0) throw Error(ErrorCode::InvalidModel, "branch " + br.id + " has r < 0");
    }
    for (auto k : oltc_branches()) {
        std::size_t fed = 0;
        for (const auto& l : loads) fed += l.bus == branches[k].to ? 1 : 0;
        if (fed != 1) {
            throw Error(ErrorCode::InvalidModel, "OLTC " + branches[k].id + " must feed exactly one load bus");
        }
    }
    for (const auto& g : generators) {
        if (g.bus >= buses.size()) throw Error(ErrorCode::InvalidModel, "generator " + g.id + " bus out of range");
    }
    for (const auto& l : loads) {
        if (l.bus >= buses.size()) throw Error(ErrorCode::InvalidModel, "load bus out of range");
    }
    for (auto m : monitored) {
        if (m >= buses.size()) throw Error(ErrorCode::InvalidModel, "monitored bus out of range");
    }
    if (!connected()) throw Error(ErrorCode::InvalidModel, "network is not connected");
}

bool branch_removal_keeps_connected(const GridModel& model, std::size_t branch) {
    return connected_without(model, branch);
}

GridModel apply_contingency(const GridModel& model, const Contingency& c) {
    GridModel out = model;
    if (c.kind == Contingency::Kind::Branch) {
        const auto k = model.branch_index(c.element);
        if (!model.branches[k].in_service) throw Error(ErrorCode::AlreadyTripped, c.element);
        if (!branch_removal_keeps_connected(model, k)) throw Error(ErrorCode::IslandingDetected, c.element);
        out.branches[k].in_service = false;
        return out;
    }
    const auto g = model.generator_index(c.element);
    if (!model.generators[g].in_service) throw Error(ErrorCode::AlreadyTripped, c.element);
    auto& gen = out.generators[g];
    if (model.buses[gen.bus].kind == BusKind::Slack) {
        throw Error(ErrorCode::InvalidModel, "cannot trip the slack generator");
    }
    gen.in_service = false;
    gen.p = 0.0;
    bool other = false;
    for (const auto& o : out.generators) other = other || (o.in_service && o.bus == gen.bus);
    if (!other) out.buses[gen.bus].kind = BusKind::PQ;
    return out;
}

std::string to_string(Region r) {
    switch (r) {
        case Region::North: return "North";
        case Region::C1: return "C1";
        case Region::C2: return "C2";
        case Region::C3: return "C3";
    }
    return "?";
}

std::string to_string(const Contingency& c) {
    return (c.kind == Contingency::Kind::Branch ? "line:" : "gen:") + c.element;
}

GridModel grid_from_json(const nlohmann::json& doc) {
    GridModel m;
    m.name = doc.value("name", "grid");
    for (const auto& b : doc.at("buses")) {
        m.buses.push_back({b.at("id").get<std::string>(), region_from(b.at("region").get<std::string>()),
                           bus_kind_from(b.at("kind").get<std::string>()), b.value("shunt_b", 0.0)});
    }
    for (const auto& b : doc.at("branches")) {
        Branch br;
        br.id = b.at("id").get<std::string>();
        br.from = m.bus_index(b.at("from").get<std::string>());
        br.to = m.bus_index(b.at("to").get<std::string>());
        br.x = b.at("x").get<double>();
        br.r = b.value("r", 0.0);
        br.in_service = b.value("in_service", true);
        const auto kind = b.value("kind", std::string("line"));
        if (kind == "line") {
            br.kind = BranchKind::Line;
        } else if (kind == "oltc-transformer") {
            br.kind = BranchKind::OltcTransformer;
        } else {
            throw Error(ErrorCode::InvalidModel, "unknown branch kind '" + kind + "'");
        }
        m.branches.push_back(br);
    }
    for (const auto& g : doc.at("generators")) {
        Generator gen;
        gen.id = g.at("id").get<std::string>();
        gen.bus = m.bus_index(g.at("bus").get<std::string>());
        gen.p = g.at("p").get<double>();
        gen.v = g.at("v").get<double>();
        gen.q_min = g.value("q_min", -9.9);
        gen.q_max = g.value("q_max", 9.9);
        gen.capacity = g.value("capacity", gen.p);
        gen.oxl = g.value("oxl", false);
        gen.in_service = g.value("in_service", true);
        m.generators.push_back(gen);
    }
    for (const auto& l : doc.at("loads")) {
        m.loads.push_back({m.bus_index(l.at("bus").get<std::string>()), l.at("p0").get<double>(),
                           l.at("q0").get<double>(), l.value("alpha_p", 1.5), l.value("alpha_q", 2.0)});
    }
    for (const auto& id : doc.at("monitored")) m.monitored.push_back(m.bus_index(id.get<std::string>()));
    m.validate();
    return m;
}

nlohmann::json grid_to_json(const GridModel& m) {
    nlohmann::json doc;
    doc["name"] = m.name;
    for (const auto& b : m.buses) {
        doc["buses"].push_back({{"id", b.id}, {"region", to_string(b.region)}, {"kind", to_json_string(b.kind)},
                                {"shunt_b", b.shunt_b}});
    }
    for (const auto& br : m.branches) {
        doc["branches"].push_back({{"id", br.id},
                                   {"from", m.buses[br.from].id},
                                   {"to", m.buses[br.to].id},
                                   {"x", br.x},
                                   {"r", br.r},
                                   {"in_service", br.in_service},
                                   {"kind", br.kind == BranchKind::Line ? "line" : "oltc-transformer"}});
    }
    for (const auto& g : m.generators) {
        doc["generators"].push_back({{"id", g.id},
                                     {"bus", m.buses[g.bus].id},
                                     {"p", g.p},
                                     {"v", g.v},
                                     {"q_min", g.q_min},
                                     {"q_max", g.q_max},
                                     {"capacity", g.capacity},
                                     {"oxl", g.oxl},
                                     {"in_service", g.in_service}});
    }
    for (const auto& l : m.loads) {
        doc["loads"].push_back({{"bus", m.buses[l.bus].id},
                                {"p0", l.p0},
                                {"q0", l.q0},
                                {"alpha_p", l.alpha_p},
                                {"alpha_q", l.alpha_q}});
    }
    doc["monitored"] = nlohmann::json::array();
    for (auto i : m.monitored) doc["monitored"].push_back(m.buses[i].id);
    return doc;
}

GridModel load_grid(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open grid file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidModel, path.string() + ": " + e.what());
    }
    return grid_from_json(doc);
}

}  // namespace vip::grid
