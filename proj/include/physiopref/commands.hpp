#pragma once

#include <string>

#include "physiopref/config.hpp"

namespace physio {

inline constexpr const char* kToolVersion = "0.1.0";

// CLI entry points. Each resolves its configuration, writes a run manifest
// before doing work, and returns a process exit code (0 on success).
int cmd_oracle(const Config& cfg, const std::string& seq_text);
int cmd_make_ref(const Config& cfg);
int cmd_gen_data(const Config& cfg);
int cmd_train(const Config& cfg);
int cmd_eval(const Config& cfg);
int cmd_sweep(const Config& cfg);
int cmd_repro_table1(const Config& cfg);

}  // namespace physio
