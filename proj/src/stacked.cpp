#include "vspinn/stacked.hpp"

#include <array>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace vspinn {

namespace {

// Seed decorrelation between the base net and the blocks (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nlohmann::json net_to_json(const DenseNet& net) {
  nlohmann::json j;
  j["dims"] = net.dims;
  j["activation"] = to_string(net.act);
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(net.W[l].size()));
    for (Eigen::Index i = 0; i < net.W[l].rows(); ++i) {
      for (Eigen::Index jj = 0; jj < net.W[l].cols(); ++jj) w.push_back(net.W[l](i, jj));
    }
    std::vector<double> bias(net.b[l].data(), net.b[l].data() + net.b[l].size());
    layers.push_back({{"weights", w}, {"biases", bias}});
  }
  j["layers"] = layers;
  return j;
}

DenseNet net_from_json(const nlohmann::json& j) {
  DenseNet net;
  net.dims = j.at("dims").get<std::vector<int>>();
  net.act = activation_from_string(j.at("activation").get<std::string>());
  const auto& layers = j.at("layers");
  for (std::size_t l = 0; l + 1 < net.dims.size(); ++l) {
    const int n_in = net.dims[l];
    const int n_out = net.dims[l + 1];
    const auto w = layers.at(l).at("weights").get<std::vector<double>>();
    const auto bias = layers.at(l).at("biases").get<std::vector<double>>();
    if (static_cast<int>(w.size()) != n_in * n_out ||
        static_cast<int>(bias.size()) != n_out) {
      throw std::runtime_error("checkpoint: layer size mismatch");
    }
    Eigen::MatrixXd wm(n_out, n_in);
    for (int i = 0; i < n_out; ++i) {
      for (int jj = 0; jj < n_in; ++jj) wm(i, jj) = w[static_cast<std::size_t>(i * n_in + jj)];
    }
    net.W.push_back(std::move(wm));
    net.b.push_back(Eigen::Map<const Eigen::VectorXd>(bias.data(), n_out));
  }
  return net;
}

}  // namespace

StackedPinn StackedPinn::init(const std::vector<int>& base_dims,
                              const std::vector<int>& block_dims, int n_blocks,
                              double alpha_init, double gamma_init, double p,
                              Activation act, std::uint64_t seed) {
  if (n_blocks < 0) throw std::invalid_argument("StackedPinn: n_blocks < 0");
  if (base_dims.front() != 2) throw std::invalid_argument("StackedPinn: base input width must be 2");
  if (n_blocks > 0 && block_dims.front() != 3) {
    throw std::invalid_argument("StackedPinn: block input width must be 3");
  }
  StackedPinn m;
  m.base = DenseNet::init(base_dims, act, mix_seed(seed, 0));
  for (int i = 0; i < n_blocks; ++i) {
    ResidualBlock blk;
    blk.alpha = alpha_init;
    blk.net = DenseNet::init(block_dims, act, mix_seed(seed, static_cast<std::uint64_t>(i) + 1));
    m.blocks.push_back(std::move(blk));
  }
  m.schedule = ViscositySchedule{gamma_init, p, n_blocks};
  return m;
}

double StackedPinn::eval_stage(int i, double t, double x) const {
  if (i < 0 || i > n_stages()) throw std::out_of_range("eval_stage: stage out of range");
  double u = base.forward(std::array<double, 2>{t, x});
  for (int j = 0; j < i; ++j) {
    const auto& blk = blocks[static_cast<std::size_t>(j)];
    u += std::fabs(blk.alpha) * blk.net.forward(std::array<double, 3>{t, x, u});
  }
  return u;
}

Jet2d StackedPinn::eval_stage_jet(int i, double t, double x) const {
  if (i < 0 || i > n_stages()) throw std::out_of_range("eval_stage_jet: stage out of range");
  Jet2d u = base.jet_forward(t, x, {});
  for (int j = 0; j < i; ++j) {
    const auto& blk = blocks[static_cast<std::size_t>(j)];
    const Jet2d y = blk.net.jet_forward(t, x, std::span<const Jet2d>(&u, 1));
    u = u + std::fabs(blk.alpha) * y;
  }
  return u;
}

std::size_t StackedPinn::param_count() const {
  std::size_t n = base.param_count();
  for (const auto& blk : blocks) n += 1 + blk.net.param_count();
  return n;
}

ParamLayout param_layout(const StackedPinn& model) {
  ParamLayout lay;
  lay.base_count = model.base.param_count();
  std::size_t off = lay.base_count;
  for (const auto& blk : model.blocks) {
    ParamLayout::BlockSpan s;
    s.alpha_index = off;
    s.net_offset = off + 1;
    s.net_count = blk.net.param_count();
    lay.blocks.push_back(s);
    off += 1 + s.net_count;
  }
  lay.total = off;
  return lay;
}

void StackedPinn::flatten(std::span<double> out) const {
  base.flatten(out.subspan(0, base.param_count()));
  std::size_t off = base.param_count();
  for (const auto& blk : blocks) {
    out[off] = blk.alpha;
    blk.net.flatten(out.subspan(off + 1, blk.net.param_count()));
    off += 1 + blk.net.param_count();
  }
}

void StackedPinn::unflatten(std::span<const double> in) {
  base.unflatten(in.subspan(0, base.param_count()));
  std::size_t off = base.param_count();
  for (auto& blk : blocks) {
    blk.alpha = in[off];
    blk.net.unflatten(in.subspan(off + 1, blk.net.param_count()));
    off += 1 + blk.net.param_count();
  }
}

void StackedPinn::save_checkpoint(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["base"] = net_to_json(base);
  nlohmann::json blks = nlohmann::json::array();
  for (const auto& blk : blocks) {
    blks.push_back({{"alpha", blk.alpha}, {"net", net_to_json(blk.net)}});
  }
  j["blocks"] = blks;
  j["schedule"] = {{"n", schedule.n}, {"gamma_init", schedule.gamma_init}, {"p", schedule.p}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

StackedPinn StackedPinn::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint: " + path.string());
  nlohmann::json j;
  in >> j;
  StackedPinn m;
  m.base = net_from_json(j.at("base"));
  for (const auto& bj : j.at("blocks")) {
    ResidualBlock blk;
    blk.alpha = bj.at("alpha").get<double>();
    blk.net = net_from_json(bj.at("net"));
    m.blocks.push_back(std::move(blk));
  }
  const auto& sj = j.at("schedule");
  m.schedule = ViscositySchedule{sj.at("gamma_init").get<double>(),
                                 sj.at("p").get<double>(), sj.at("n").get<int>()};
  if (m.schedule.n != m.n_stages()) throw std::runtime_error("checkpoint: block count mismatch");
  return m;
}

}  // namespace vspinn
