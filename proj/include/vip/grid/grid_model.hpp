#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vip::grid {

enum class Region { North, C1, C2, C3 };
enum class BusKind { Slack, PV, PQ };
enum class BranchKind { Line, OltcTransformer };

struct Bus {
    std::string id;
    Region region = Region::North;
    BusKind kind = BusKind::PQ;
    double shunt_b = 0.0;  ///< shunt susceptance, pu (capacitive > 0)
};

struct Branch {
    std::string id;
    std::size_t from = 0;
    std::size_t to = 0;
    double x = 0.0;  ///< series reactance, pu
    double r = 0.0;  ///< series resistance, pu
    bool in_service = true;
    BranchKind kind = BranchKind::Line;
};

struct Generator {
    std::string id;
    std::size_t bus = 0;
    double p = 0.0;  ///< active power setpoint, pu
    double v = 1.0;  ///< voltage setpoint, pu
    double q_min = -9.9;
    double q_max = 9.9;
    double capacity = 0.0;  ///< rated active power, pu; weights redispatch
    bool oxl = false;
    bool in_service = true;
};

struct Load {
    std::size_t bus = 0;
    double p0 = 0.0;
    double q0 = 0.0;
    double alpha_p = 1.5;
    double alpha_q = 2.0;
};

/// Static network description. Bus/branch indices are positions in the
/// vectors; string ids are kept for files and diagnostics.
struct GridModel {
    std::string name;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    std::vector<Load> loads;
    std::vector<std::size_t> monitored;  ///< buses used for collapse detection and labels

    [[nodiscard]] std::size_t bus_index(std::string_view id) const;
    [[nodiscard]] std::size_t branch_index(std::string_view id) const;
    [[nodiscard]] std::size_t generator_index(std::string_view id) const;
    [[nodiscard]] std::size_t slack_bus() const;
    [[nodiscard]] std::size_t in_service_branch_count() const;
    [[nodiscard]] std::vector<std::size_t> oltc_branches() const;
    /// Load index fed by each OLTC branch (same order as oltc_branches()).
    [[nodiscard]] std::vector<std::size_t> oltc_load_index() const;
    /// True iff every bus is reachable from the slack over in-service branches.
    [[nodiscard]] bool connected() const;

    /// Throws Error(InvalidModel) if any structural invariant fails.
    void validate() const;
};

struct Contingency {
    enum class Kind { Branch, Generator };
    Kind kind = Kind::Branch;
    std::string element;  ///< branch or generator id

    static Contingency trip_branch(std::string id) { return {Kind::Branch, std::move(id)}; }
    static Contingency trip_generator(std::string id) { return {Kind::Generator, std::move(id)}; }
    friend bool operator==(const Contingency&, const Contingency&) = default;
};

/// Returns a copy of `model` with the element removed from service. Throws
/// UnknownElement, AlreadyTripped, or IslandingDetected (branch removals that
/// disconnect any bus).
[[nodiscard]] GridModel apply_contingency(const GridModel& model, const Contingency& c);

/// Whether removing the branch would leave every bus connected.
[[nodiscard]] bool branch_removal_keeps_connected(const GridModel& model, std::size_t branch);

std::string to_string(Region r);
std::string to_string(const Contingency& c);

GridModel grid_from_json(const nlohmann::json& doc);
nlohmann::json grid_to_json(const GridModel& model);
GridModel load_grid(const std::filesystem::path& path);

}  // namespace vip::grid
