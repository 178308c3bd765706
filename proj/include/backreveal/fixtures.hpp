#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "backreveal/attacker.hpp"
#include "backreveal/rag.hpp"
#include "backreveal/sim.hpp"
#include "backreveal/trigger.hpp"

namespace backreveal::fixtures {

/// Deterministic synthetic workloads shared by the CLI defaults, the
/// evaluation matrices and the test suites. Everything here is a pure
/// function of its seed.

/// General-purpose benign queries; a small seeded fraction carries one, two
/// or three domain terms so per-length false-positive rates are non-trivial.
std::vector<std::string> benign_query_fixture(int n, uint64_t seed);

/// Nested keyword chains (each length-L pattern extends a length-(L-1) one),
/// ten chains over streaming vocabulary. Used by the trigger-length
/// evaluation matrix.
trigger::TriggerSet chained_trigger_set(int per_length = 10);

/// The worked streaming / medical trigger vocabularies, including the
/// re-injection token groups.
trigger::TriggerSet streaming_trigger_set();
trigger::TriggerSet medical_trigger_set();

/// Topical document corpus for the delivery gauntlet.
rag::Corpus corpus_fixture(int n_docs, uint64_t seed);

struct DeliveryFixtureCase {
  std::string query;
  std::vector<std::string> info;     // relevant sentences for the query
  attacker::SteeringEntry entry;     // rotating elicitation intent
};

/// Queries paired with on-topic info sentences and a steering intent whose
/// naive phrasing names personally identifying targets.
std::vector<DeliveryFixtureCase> delivery_fixture(int n, uint64_t seed);

/// Synthetic persona for generic batch episodes.
sim::Persona persona_fixture(const std::string& domain, uint64_t seed);

}  // namespace backreveal::fixtures
