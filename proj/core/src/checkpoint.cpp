#include "fn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace fn {

void save_checkpoint(const Model& m, const std::string& path) {
  std::ofstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("checkpoint: cannot write " + path + ".bin");
  nlohmann::json manifest = nlohmann::json::array();
  std::int64_t offset = 0;
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const auto& t = m.params[i];
    bin.write(reinterpret_cast<const char*>(t.v.data()),
              static_cast<std::streamsize>(t.v.size() * sizeof(double)));
    manifest.push_back({{"name", m.names[i]}, {"shape", t.shape}, {"offset", offset}});
    offset += t.numel();
  }
  if (!bin) throw std::runtime_error("checkpoint: write failed for " + path + ".bin");
  std::ofstream js(path + ".json");
  if (!js) throw std::runtime_error("checkpoint: cannot write " + path + ".json");
  js << manifest.dump(2) << '\n';
}

void load_checkpoint(Model& m, const std::string& path) {
  std::ifstream js(path + ".json");
  if (!js) throw std::runtime_error("checkpoint: missing " + path + ".json");
  const nlohmann::json manifest = nlohmann::json::parse(js);
  std::ifstream bin(path + ".bin", std::ios::binary);
  if (!bin) throw std::runtime_error("checkpoint: missing " + path + ".bin");
  if (manifest.size() != m.params.size())
    throw std::runtime_error("checkpoint: tensor count mismatch");
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != m.names[i])
      throw std::runtime_error("checkpoint: tensor name mismatch at index " + std::to_string(i));
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != m.params[i].shape) throw std::runtime_error("checkpoint: shape mismatch for " + m.names[i]);
    bin.seekg(entry.at("offset").get<std::int64_t>() * static_cast<std::int64_t>(sizeof(double)));
    bin.read(reinterpret_cast<char*>(m.params[i].v.data()),
             static_cast<std::streamsize>(m.params[i].v.size() * sizeof(double)));
    if (!bin) throw std::runtime_error("checkpoint: truncated data for " + m.names[i]);
  }
}

}  // namespace fn
