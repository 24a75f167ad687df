#pragma once

#include "adhere/service.hpp"
#include "adhere/simulator.hpp"

namespace adhere {

/// Writes a simulated cohort into the platform store through the same
/// create/import/close path live data takes. Returns the number of patients.
int load_simulation(AdherenceService& service, const sim::SimulatedCohort& cohort);

}  // namespace adhere
