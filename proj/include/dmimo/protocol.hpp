#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dmimo/assignment.hpp"
#include "dmimo/network_model.hpp"

namespace dmimo {

enum class MessageKind : std::uint8_t {
    PilotProbe,      // UE -> AP
    CandidateOffer,  // AP -> UE, carries C_m
    PilotNotify,     // UE -> AP, carries the chosen pilot
};

inline constexpr std::size_t kMessageKinds = 3;

std::string_view to_string(MessageKind kind);

struct NodeId {
    enum class Role : std::uint8_t { Ue, Ap };
    Role role = Role::Ue;
    std::size_t index = 0;

    static NodeId ue(UeIndex t) { return {Role::Ue, t}; }
    static NodeId ap(ApIndex m) { return {Role::Ap, m}; }

    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

std::string to_string(NodeId node);

struct Message {
    MessageKind kind = MessageKind::PilotProbe;
    NodeId src;
    NodeId dst;
    std::vector<PilotIndex> payload;
    std::size_t arrival_index = 0;
    UeIndex ue = 0;  // the arriving UE this exchange belongs to

    std::size_t payload_size() const { return payload.size(); }
};

/// Thrown when a message would connect two APs, or a node to itself.
class LocalityViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Thrown by audit_overhead when a UE's message count is off budget.
class BudgetViolation : public std::runtime_error {
public:
    BudgetViolation(UeIndex ue, const std::string& what) : std::runtime_error(what), ue_(ue) {}
    UeIndex ue() const { return ue_; }

private:
    UeIndex ue_;
};

class TraceLog {
public:
    void record(const Message& msg);

    const std::vector<Message>& messages() const { return messages_; }
    std::uint64_t count(MessageKind kind) const { return per_kind_[static_cast<std::size_t>(kind)]; }
    std::uint64_t edge_count(NodeId src, NodeId dst) const;
    const std::map<std::pair<NodeId, NodeId>, std::uint64_t>& edges() const { return per_edge_; }

    /// Recomputes all counters from the message list and compares.
    bool counters_consistent() const;

    /// Line-delimited records: arrival_index,kind,src,dst,payload_size
    void write(std::ostream& out) const;

private:
    std::vector<Message> messages_;
    std::array<std::uint64_t, kMessageKinds> per_kind_{};
    std::map<std::pair<NodeId, NodeId>, std::uint64_t> per_edge_;
};

/// FIFO delivery between agents. Every sent message is recorded in the log;
/// AP-to-AP and self-addressed messages are refused with LocalityViolation.
class MessageBus {
public:
    explicit MessageBus(TraceLog& log) : log_(log) {}

    void send(Message msg);
    bool empty() const { return queue_.empty(); }
    Message pop();

private:
    TraceLog& log_;
    std::deque<Message> queue_;
};

struct ProtocolRun {
    PilotAssignment assignment;
    TraceLog log;
};

/// Runs the distributed scheme as explicit UE and AP agents exchanging
/// messages. Each AP agent sees only its own ApLocalState; there is no CPU
/// node. `arrival_order` must be a permutation of the UEs (index order if empty).
ProtocolRun run_protocol(const NetworkRealization& real, const AssociationMap& assoc,
                         const PowerProfile& powers, std::size_t pilot_length,
                         const SchemeConfig& scheme, std::span<const UeIndex> arrival_order = {});

struct UeBudget {
    std::uint64_t probes = 0;
    std::uint64_t offers = 0;
    std::uint64_t notifies = 0;
};

struct OverheadReport {
    std::vector<UeBudget> per_ue;
    std::array<std::uint64_t, kMessageKinds> totals{};
    std::uint64_t total_payload = 0;
    std::uint64_t ap_to_ap = 0;

    std::uint64_t total_messages() const { return totals[0] + totals[1] + totals[2]; }
};

/// Checks every UE spent exactly S'_t probes, S'_t offers and |M_t| notifies
/// and that no AP-AP message exists. Throws BudgetViolation otherwise.
OverheadReport audit_overhead(const TraceLog& log, const AssociationMap& assoc, std::size_t S);

/// Random permutation of UE indices from a seeded stream.
std::vector<UeIndex> random_arrival_order(std::size_t num_ues, std::uint64_t seed);

} // namespace dmimo
