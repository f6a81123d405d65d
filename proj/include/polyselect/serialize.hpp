#pragma once

// JSON encodings of the library's records and small file helpers.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "polyselect/bayes.hpp"
#include "polyselect/datagen.hpp"
#include "polyselect/harness.hpp"
#include "polyselect/mle.hpp"

namespace polyselect {

using Json = nlohmann::ordered_json;

void to_json(Json& j, ModelKind model);
void from_json(const Json& j, ModelKind& model);
void to_json(Json& j, const SimCondition& cond);
void from_json(const Json& j, SimCondition& cond);
void to_json(Json& j, const FreqIndices& indices);
void to_json(Json& j, const BayesIndices& indices);
void to_json(Json& j, const ReplicationResult& result);
void from_json(const Json& j, ReplicationResult& result);
void to_json(Json& j, const SelectionTally& tally);
void from_json(const Json& j, SelectionTally& tally);

/// Named natural parameters of a bank, e.g. {"a[1]": 1.19, "b[1,1]": -1.21}.
Json bank_to_json(const ItemBank& bank);
/// Model, estimates, log-likelihood, k, cycle count, convergence and indices.
Json fit_to_json(const MleFit& fit, const FreqIndices& indices);

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace polyselect
