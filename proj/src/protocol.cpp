#include "dmimo/protocol.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <ostream>

#include "dmimo/rng.hpp"

namespace dmimo {

std::string_view to_string(MessageKind kind)
{
    switch (kind) {
    case MessageKind::PilotProbe: return "PilotProbe";
    case MessageKind::CandidateOffer: return "CandidateOffer";
    case MessageKind::PilotNotify: return "PilotNotify";
    }
    return "?";
}

std::string to_string(NodeId node)
{
    return (node.role == NodeId::Role::Ue ? "ue" : "ap") + std::to_string(node.index);
}

void TraceLog::record(const Message& msg)
{
    messages_.push_back(msg);
    ++per_kind_[static_cast<std::size_t>(msg.kind)];
    ++per_edge_[{msg.src, msg.dst}];
}

std::uint64_t TraceLog::edge_count(NodeId src, NodeId dst) const
{
    const auto it = per_edge_.find({src, dst});
    return it == per_edge_.end() ? 0 : it->second;
}

bool TraceLog::counters_consistent() const
{
    std::array<std::uint64_t, kMessageKinds> kinds{};
    std::map<std::pair<NodeId, NodeId>, std::uint64_t> edges;
    for (const Message& m : messages_) {
        ++kinds[static_cast<std::size_t>(m.kind)];
        ++edges[{m.src, m.dst}];
    }
    return kinds == per_kind_ && edges == per_edge_;
}

void TraceLog::write(std::ostream& out) const
{
    out << "arrival_index,kind,src,dst,payload_size\n";
    for (const Message& m : messages_)
        out << m.arrival_index << ',' << to_string(m.kind) << ',' << to_string(m.src) << ','
            << to_string(m.dst) << ',' << m.payload_size() << '\n';
}

void MessageBus::send(Message msg)
{
    if (msg.src == msg.dst)
        throw LocalityViolation("message addressed to its own sender");
    if (msg.src.role == NodeId::Role::Ap && msg.dst.role == NodeId::Role::Ap)
        throw LocalityViolation("AP-to-AP message " + to_string(msg.src) + " -> " +
                                to_string(msg.dst));
    log_.record(msg);
    queue_.push_back(std::move(msg));
}

Message MessageBus::pop()
{
    Message m = std::move(queue_.front());
    queue_.pop_front();
    return m;
}

namespace {

class ApAgent {
public:
    explicit ApAgent(ApLocalState state) : state_(std::move(state)) {}

    void on_message(const Message& msg, double delta, MessageBus& bus)
    {
        switch (msg.kind) {
        case MessageKind::PilotProbe: {
            CandidateSet offer = dpb_candidates(msg.ue, delta, state_);
            bus.send(Message{MessageKind::CandidateOffer, NodeId::ap(state_.id()), msg.src,
                             std::move(offer.pilots), msg.arrival_index, msg.ue});
            break;
        }
        case MessageKind::PilotNotify:
            state_.learn(msg.ue, msg.payload.at(0));
            break;
        case MessageKind::CandidateOffer:
            throw LocalityViolation("AP received a candidate offer");
        }
    }

private:
    ApLocalState state_;
};

class UeAgent {
public:
    UeAgent(UeIndex id, std::span<const ApIndex> serving, std::size_t S, TieRule rule,
            std::uint64_t tie_seed)
        : id_(id),
          serving_(serving.begin(), serving.end()),
          priority_(serving_.begin(),
                    serving_.begin() + static_cast<std::ptrdiff_t>(std::min(S, serving_.size()))),
          rule_(rule),
          tie_seed_(tie_seed),
          offers_(priority_.size())
    {
    }

    void arrive(std::size_t arrival_index, MessageBus& bus)
    {
        arrival_index_ = arrival_index;
        for (ApIndex m : priority_)
            bus.send(Message{MessageKind::PilotProbe, NodeId::ue(id_), NodeId::ap(m), {},
                             arrival_index_, id_});
    }

    void on_message(const Message& msg, MessageBus& bus)
    {
        if (msg.kind != MessageKind::CandidateOffer)
            throw LocalityViolation("UE received a non-offer message");
        const auto it = std::find(priority_.begin(), priority_.end(), msg.src.index);
        if (it == priority_.end())
            throw LocalityViolation("offer from an AP that was not probed");
        offers_[static_cast<std::size_t>(it - priority_.begin())] =
            CandidateSet{msg.src.index, msg.payload};
        if (++received_ < priority_.size())
            return;

        pilot_ = priority_select(offers_, rule_, tie_seed_);
        for (ApIndex m : serving_)
            bus.send(Message{MessageKind::PilotNotify, NodeId::ue(id_), NodeId::ap(m), {pilot_},
                             arrival_index_, id_});
    }

    bool decided() const { return received_ == priority_.size() && !priority_.empty(); }
    PilotIndex pilot() const { return pilot_; }

private:
    UeIndex id_;
    std::vector<ApIndex> serving_;
    std::vector<ApIndex> priority_;
    TieRule rule_;
    std::uint64_t tie_seed_;
    std::vector<CandidateSet> offers_;
    std::size_t received_ = 0;
    std::size_t arrival_index_ = 0;
    PilotIndex pilot_ = kUnassigned;
};

std::vector<UeIndex> checked_order(std::span<const UeIndex> order, std::size_t T)
{
    std::vector<UeIndex> out;
    if (order.empty()) {
        out.resize(T);
        std::iota(out.begin(), out.end(), UeIndex{0});
        return out;
    }
    out.assign(order.begin(), order.end());
    std::vector<UeIndex> sorted = out;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t k = 0; k < sorted.size(); ++k)
        if (sorted[k] != k)
            throw std::invalid_argument("run_protocol: arrival order is not a permutation of UEs");
    if (sorted.size() != T)
        throw std::invalid_argument("run_protocol: arrival order does not cover all UEs");
    return out;
}

} // namespace

ProtocolRun run_protocol(const NetworkRealization& real, const AssociationMap& assoc,
                         const PowerProfile& powers, std::size_t pilot_length,
                         const SchemeConfig& scheme, std::span<const UeIndex> arrival_order)
{
    if (scheme.id != SchemeId::Dpb)
        throw std::invalid_argument("run_protocol: only the distributed scheme has a protocol");
    scheme.validate();

    const std::size_t T = real.num_ues();
    const std::vector<UeIndex> order = checked_order(arrival_order, T);

    std::vector<ApAgent> aps;
    aps.reserve(real.num_aps());
    for (ApIndex m = 0; m < real.num_aps(); ++m)
        aps.emplace_back(ApLocalState(m, real.beta.row(static_cast<Eigen::Index>(m)).transpose(),
                                      powers.p_pilot, pilot_length));

    std::vector<UeAgent> ues;
    ues.reserve(T);
    for (UeIndex t = 0; t < T; ++t)
        ues.emplace_back(t, assoc.serving_aps.at(t), scheme.dpb_S, scheme.tie_rule,
                         dpb_tie_seed(scheme.seed, t));

    ProtocolRun run{PilotAssignment(T, pilot_length), TraceLog{}};
    MessageBus bus(run.log);
    for (std::size_t j = 0; j < order.size(); ++j) {
        const UeIndex t = order[j];
        ues[t].arrive(j, bus);
        while (!bus.empty()) {
            const Message msg = bus.pop();
            if (msg.dst.role == NodeId::Role::Ap)
                aps.at(msg.dst.index).on_message(msg, scheme.dpb_delta, bus);
            else
                ues.at(msg.dst.index).on_message(msg, bus);
        }
        if (!ues[t].decided())
            throw std::logic_error("run_protocol: UE finished its arrival without a pilot");
        run.assignment.assign(t, ues[t].pilot());
    }
    return run;
}

OverheadReport audit_overhead(const TraceLog& log, const AssociationMap& assoc, std::size_t S)
{
    OverheadReport report;
    report.per_ue.resize(assoc.num_ues());
    for (const Message& m : log.messages()) {
        if (m.src.role == NodeId::Role::Ap && m.dst.role == NodeId::Role::Ap)
            ++report.ap_to_ap;
        ++report.totals[static_cast<std::size_t>(m.kind)];
        report.total_payload += m.payload_size();
        UeBudget& b = report.per_ue.at(m.ue);
        switch (m.kind) {
        case MessageKind::PilotProbe: ++b.probes; break;
        case MessageKind::CandidateOffer: ++b.offers; break;
        case MessageKind::PilotNotify: ++b.notifies; break;
        }
    }
    if (report.ap_to_ap != 0)
        throw BudgetViolation(0, "trace contains AP-to-AP messages");

    for (UeIndex t = 0; t < assoc.num_ues(); ++t) {
        const std::size_t serving = assoc.serving_aps[t].size();
        const std::size_t priority = std::min(S, serving);
        const UeBudget& b = report.per_ue[t];
        if (b.probes != priority || b.offers != priority || b.notifies != serving)
            throw BudgetViolation(t, "UE " + std::to_string(t) + " used " +
                                         std::to_string(b.probes) + "/" +
                                         std::to_string(b.offers) + "/" +
                                         std::to_string(b.notifies) +
                                         " probes/offers/notifies, expected " +
                                         std::to_string(priority) + "/" +
                                         std::to_string(priority) + "/" +
                                         std::to_string(serving));
    }
    return report;
}

std::vector<UeIndex> random_arrival_order(std::size_t num_ues, std::uint64_t seed)
{
    std::vector<UeIndex> order(num_ues);
    std::iota(order.begin(), order.end(), UeIndex{0});
    Engine engine = make_engine(derive_seed(seed, {tag(StreamTag::Arrival)}));
    std::shuffle(order.begin(), order.end(), engine);
    return order;
}

} // namespace dmimo
