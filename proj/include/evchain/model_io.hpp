#pragma once

#include "evchain/model.hpp"

#include <memory>
#include <string>

namespace evchain {

// File formats (JSON):
//
// Metamodel:
//   {"name": ..., "classes": [{"name", "attributes": [{"name","type"}],
//    "references": [{"name","target","multiplicity","containment"}]}]}
//
// Instance:
//   {"metamodel": ..., "objects": [{"id","class","attributes":{...},
//    "references": {"name": ["id", ...]}}]}
//
// load_* validate everything they return: a model that comes back from
// load_instance satisfies every conformance rule or the call throws.

Metamodel load_metamodel(const std::string& document);

InstanceModel load_instance(const std::string& document,
                            std::shared_ptr<const Metamodel> mm);

// Re-checks an in-memory model against its metamodel (same rules as
// load_instance). Used by the pipeline on lowered and agent-built models.
void check_conformance(const InstanceModel& m);

// Canonical text: objects ordered by id, keys ordered, stable float
// rendering. Serializing structurally equal models yields identical bytes.
std::string serialize_instance(const InstanceModel& m);

} // namespace evchain
