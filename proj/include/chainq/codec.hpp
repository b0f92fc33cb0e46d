#pragma once

// JSON envelopes for answers, expressions, tokens, verdicts and fault sets.
// Layout is documented in docs/formats.md.

#include <string>

#include "json.hpp"

#include "chainq/challenge.hpp"
#include "chainq/query.hpp"

namespace chainq {

using Json = nlohmann::json;

Json to_json(const DataObject& o);
DataObject object_from_json(const Json& j);

Json to_json(const QueryExpr& e);
QueryExpr expr_from_json(const Json& j);

Json to_json(const QueryAnswer& a);
QueryAnswer answer_from_json(const Json& j);

Json to_json(const DetectingToken& t);
Json to_json(const ChallengeVerdict& v);

Json to_json(const FaultSet& f);
FaultSet faults_from_json(const Json& j);

}  // namespace chainq
