#include "dmimo/pilot_assignment.hpp"

#include <algorithm>
#include <stdexcept>

namespace dmimo {

PilotAssignment::PilotAssignment(std::size_t num_ues, std::size_t num_pilots)
    : pilot_of_(num_ues, kUnassigned), copilots_(num_pilots)
{
    if (num_pilots == 0)
        throw std::invalid_argument("PilotAssignment: at least one pilot is required");
}

bool PilotAssignment::complete() const
{
    return std::none_of(pilot_of_.begin(), pilot_of_.end(),
                        [](PilotIndex i) { return i == kUnassigned; });
}

void PilotAssignment::assign(UeIndex t, PilotIndex i)
{
    if (t >= pilot_of_.size())
        throw std::out_of_range("PilotAssignment: UE index out of range");
    if (i >= copilots_.size())
        throw std::out_of_range("PilotAssignment: pilot index out of range");
    if (pilot_of_[t] != kUnassigned)
        throw std::logic_error("PilotAssignment: UE already holds a pilot");
    pilot_of_[t] = i;
    copilots_[i].push_back(t);
}

} // namespace dmimo
