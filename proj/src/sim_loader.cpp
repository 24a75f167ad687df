#include "adhere/sim_loader.hpp"

namespace adhere {

int load_simulation(AdherenceService& service, const sim::SimulatedCohort& cohort) {
  for (const auto& m : cohort.members) {
    service.create_patient(m.sim.patient, m.sim.schedule);
    service.import_history(m.sim.patient.patient_id, m.sim.events, m.sim.labs.observations);
  }
  service.close_days(cohort.period().to);
  return static_cast<int>(cohort.members.size());
}

}  // namespace adhere
