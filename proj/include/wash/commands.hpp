#pragma once

#include "wash/config.hpp"
#include "wash/experiments.hpp"

#include <json.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace wash {

inline constexpr int kSchemaVersion = 1;

/// `# `-prefixed header lines: schema tag, every resolved config key, seed.
std::string artifact_header(const RunConfig& c, const std::string& kind);

nlohmann::ordered_json config_json(const RunConfig& c);
nlohmann::ordered_json params_json(const ModelParams& m);
nlohmann::ordered_json batch_json(const BatchSummary& s);
nlohmann::ordered_json gof_json(const GofReport& g);

/// Writes `# header` + `columns` + rows to dir/name and returns the path.
std::filesystem::path write_csv(const std::filesystem::path& dir, const std::string& name, const RunConfig& c,
                                const std::string& columns, const std::vector<std::string>& rows);
std::filesystem::path write_json(const std::filesystem::path& dir, const std::string& name,
                                 const nlohmann::ordered_json& j);

/// Batch CSV rows `seed,N,T_final,x_final,p_final,n_events,outcome`.
std::vector<std::string> batch_rows(const std::vector<TrialRecord>& records);
/// Event CSV rows `trial,k,S_k,T_k1,z_at_S,v_at_T,crossed`.
std::vector<std::string> event_rows(const std::vector<TrialRecord>& records);

/// Runs the subcommand named in the config. Returns 0 iff every check of the
/// command passes. Progress goes to `out`; errors propagate as exceptions.
int run_command(const RunConfig& c, std::ostream& out);

}  // namespace wash
