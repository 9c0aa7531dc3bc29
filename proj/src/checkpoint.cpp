#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "milb/train.hpp"

namespace milb {

void save_checkpoint(const MdnParams& params, std::size_t step_count, const std::string& path) {
  const auto& arch = params.arch();
  nlohmann::ordered_json doc;
  doc["arch"] = {{"input_dim", arch.input_dim},
                 {"output_dim", arch.output_dim},
                 {"hidden", arch.hidden},
                 {"depth", arch.depth},
                 {"n_components", arch.n_components}};
  doc["step_count"] = step_count;
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& block : params.blocks()) {
    const double* data = params.flat().data() + block.offset;
    blocks.push_back({{"name", block.name},
                      {"rows", block.rows},
                      {"cols", block.cols},
                      {"data", std::vector<double>(data, data + block.size())}});
  }
  doc["blocks"] = std::move(blocks);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  out << doc.dump() << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  const auto doc = nlohmann::json::parse(in);
  MdnArch arch;
  const auto& a = doc.at("arch");
  arch.input_dim = a.at("input_dim").get<std::size_t>();
  arch.output_dim = a.at("output_dim").get<std::size_t>();
  arch.hidden = a.at("hidden").get<std::size_t>();
  arch.depth = a.at("depth").get<std::size_t>();
  arch.n_components = a.at("n_components").get<std::size_t>();
  Checkpoint ck{MdnParams(arch), doc.at("step_count").get<std::size_t>()};
  const auto expected = ck.params.blocks();
  const auto& blocks = doc.at("blocks");
  if (blocks.size() != expected.size()) throw std::runtime_error("load_checkpoint: block count mismatch");
  for (std::size_t b = 0; b < expected.size(); ++b) {
    const auto& block = expected[b];
    const auto data = blocks[b].at("data").get<std::vector<double>>();
    if (blocks[b].at("name").get<std::string>() != block.name || data.size() != block.size())
      throw std::runtime_error("load_checkpoint: block '" + block.name + "' does not match the architecture");
    std::copy(data.begin(), data.end(), ck.params.flat().data() + block.offset);
  }
  return ck;
}

}  // namespace milb
