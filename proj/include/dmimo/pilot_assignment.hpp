#pragma once

#include <span>
#include <vector>

#include "dmimo/types.hpp"

namespace dmimo {

/// Pilot index per UE plus the induced co-pilot sets. The co-pilot sets
/// always partition the assigned UEs; members of each set are kept in
/// assignment order.
class PilotAssignment {
public:
    PilotAssignment(std::size_t num_ues, std::size_t num_pilots);

    std::size_t num_ues() const { return pilot_of_.size(); }
    std::size_t num_pilots() const { return copilots_.size(); }

    PilotIndex pilot_of(UeIndex t) const { return pilot_of_.at(t); }
    bool is_assigned(UeIndex t) const { return pilot_of_.at(t) != kUnassigned; }
    bool complete() const;

    /// UEs currently holding pilot `i`.
    std::span<const UeIndex> copilots(PilotIndex i) const { return copilots_.at(i); }

    /// Assigns a pilot to an unassigned UE. Reassignment is an error;
    /// assignments are never revisited.
    void assign(UeIndex t, PilotIndex i);

    const std::vector<PilotIndex>& pilots() const { return pilot_of_; }

private:
    std::vector<PilotIndex> pilot_of_;
    std::vector<std::vector<UeIndex>> copilots_;
};

} // namespace dmimo
