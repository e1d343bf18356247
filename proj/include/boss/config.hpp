#pragma once
// Study config files (YAML). Sections: space, boss, tpe, trainer, dataset,
// and optionally baseline and seeds. Unknown keys and missing sections are
// errors that name the file and line.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "boss/orchestrator.hpp"

namespace boss::config {

struct StudyConfigFile {
  BossConfig config;
  std::vector<std::uint64_t> seeds{1};
};

StudyConfigFile parse_config(const std::string& text, const std::string& origin = "<config>");
StudyConfigFile load_config(const std::filesystem::path& path);

}  // namespace boss::config
