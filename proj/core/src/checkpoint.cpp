#include "mrprime/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mrprime {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'R', 'P', 'R', 'C', 'K', 'P', '1'};

void write_f32_blob(std::ofstream& out, const std::vector<double>& v) {
  std::vector<float> buf(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) buf[i] = static_cast<float>(v[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

std::vector<double> read_f32_blob(std::ifstream& in, std::size_t n, const std::string& path) {
  std::vector<float> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != n * sizeof(float))
    throw std::runtime_error("checkpoint: truncated blob in " + path);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(buf[i]);
  return v;
}

} // namespace

void save_checkpoint(const std::string& path, const UnetModel& model, const CheckpointInfo& info,
                     const Rmsprop* opt) {
  nlohmann::json header;
  header["format"] = "mrprime-checkpoint";
  header["version"] = 1;
  header["config"] = {{"in_channels", model.config().in_channels},
                      {"depth", model.config().depth},
                      {"base_channels", model.config().base_channels}};
  header["kind"] = info.kind;
  header["init_seed"] = info.init_seed;
  header["epoch"] = info.epoch;
  header["val_loss"] = info.val_loss;
  header["train_mask"] = {{"pattern", info.train_mask_pattern},
                          {"R", info.train_mask_r},
                          {"cf", info.train_mask_cf}};
  nlohmann::json params = nlohmann::json::array();
  for (const Parameter& p : model.params())
    params.push_back({{"name", p.name}, {"shape", p.tensor.shape()}});
  header["params"] = std::move(params);
  header["has_opt_state"] = opt != nullptr;
  if (opt)
    header["optimizer"] = {{"lr", opt->config().lr},
                           {"alpha", opt->config().alpha},
                           {"eps", opt->config().eps}};

  const std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint32_t hlen = static_cast<std::uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const Parameter& p : model.params()) write_f32_blob(out, p.tensor.data());
  if (opt)
    for (const auto& v : opt->square_avg()) write_f32_blob(out, v);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (in.gcount() != sizeof(hlen)) throw std::runtime_error("checkpoint: truncated header length");
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (static_cast<std::uint32_t>(in.gcount()) != hlen)
    throw std::runtime_error("checkpoint: truncated header in " + path);
  nlohmann::json header = nlohmann::json::parse(htext);
  if (header.at("format").get<std::string>() != "mrprime-checkpoint")
    throw std::runtime_error("checkpoint: unknown format in " + path);

  LoadedCheckpoint lc;
  UnetConfig cfg;
  cfg.in_channels = header.at("config").at("in_channels").get<int>();
  cfg.depth = header.at("config").at("depth").get<int>();
  cfg.base_channels = header.at("config").at("base_channels").get<int>();
  lc.info.kind = header.at("kind").get<std::string>();
  lc.info.init_seed = header.at("init_seed").get<std::uint64_t>();
  lc.info.epoch = header.at("epoch").get<int>();
  lc.info.val_loss = header.value("val_loss", 0.0);
  if (header.contains("train_mask")) {
    const auto& tm = header.at("train_mask");
    lc.info.train_mask_pattern = tm.at("pattern").get<std::string>();
    lc.info.train_mask_r = tm.at("R").get<int>();
    lc.info.train_mask_cf = tm.at("cf").get<double>();
  }

  lc.model = UnetModel(cfg, lc.info.init_seed);
  const auto& jparams = header.at("params");
  auto& params = lc.model.params();
  if (jparams.size() != params.size())
    throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& jp = jparams[i];
    if (jp.at("name").get<std::string>() != params[i].name)
      throw std::runtime_error("checkpoint: parameter name mismatch at index " +
                               std::to_string(i) + " in " + path);
    if (jp.at("shape").get<std::vector<int>>() != params[i].tensor.shape())
      throw std::runtime_error("checkpoint: parameter shape mismatch for " + params[i].name);
    params[i].tensor.data() =
        read_f32_blob(in, static_cast<std::size_t>(params[i].tensor.numel()), path);
  }
  lc.has_opt_state = header.at("has_opt_state").get<bool>();
  if (lc.has_opt_state) {
    lc.opt_config.lr = header.at("optimizer").at("lr").get<double>();
    lc.opt_config.alpha = header.at("optimizer").at("alpha").get<double>();
    lc.opt_config.eps = header.at("optimizer").at("eps").get<double>();
    lc.opt_state.reserve(params.size());
    for (const Parameter& p : params)
      lc.opt_state.push_back(read_f32_blob(in, static_cast<std::size_t>(p.tensor.numel()), path));
  }
  return lc;
}

} // namespace mrprime
