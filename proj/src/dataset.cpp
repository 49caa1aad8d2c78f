#include "ssm/dataset.hpp"

#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

#include "ssm/format.hpp"

namespace ssm {

namespace {

constexpr const char* kMagic = "ssm-dataset";
constexpr int kFormatVersion = 1;

struct SplitSizes {
  std::size_t train, dev, test;
};

SplitSizes split_sizes(std::size_t per_class) {
  const std::size_t held_out = per_class / 10;
  return {per_class - 2 * held_out, held_out, held_out};
}

}  // namespace

SyntheticDataset generate_dataset(const DatasetConfig& config) {
  if (config.n_classes < 2) throw std::invalid_argument("n_classes must be >= 2");
  if (config.feature_dim == 0) throw std::invalid_argument("feature_dim must be >= 1");
  if (config.samples_per_class == 0) throw std::invalid_argument("samples_per_class must be >= 1");
  if (!(config.noise_scale >= 0.0)) throw std::invalid_argument("noise_scale must be >= 0");

  const std::size_t dim = config.feature_dim;
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<double> centroids(config.n_classes * dim);
  for (double& c : centroids) c = gauss(rng);

  SyntheticDataset data;
  data.config = config;
  for (Split* s : {&data.train, &data.dev, &data.test}) s->feature_dim = dim;

  const SplitSizes sizes = split_sizes(config.samples_per_class);
  for (std::size_t c = 0; c < config.n_classes; ++c) {
    for (std::size_t s = 0; s < config.samples_per_class; ++s) {
      Split& dst = s < sizes.train               ? data.train
                   : s < sizes.train + sizes.dev ? data.dev
                                                 : data.test;
      for (std::size_t j = 0; j < dim; ++j) {
        dst.features.push_back(centroids[c * dim + j] + config.noise_scale * gauss(rng));
      }
      dst.labels.push_back(c);
    }
  }
  return data;
}

void write_dataset(const SyntheticDataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const DatasetConfig& c = data.config;
  out << kMagic << '=' << kFormatVersion << '\n'
      << "n_classes=" << c.n_classes << '\n'
      << "feature_dim=" << c.feature_dim << '\n'
      << "samples_per_class=" << c.samples_per_class << '\n'
      << "noise_scale=" << format_double(c.noise_scale) << '\n'
      << "seed=" << c.seed << '\n'
      << "train=" << data.train.rows() << '\n'
      << "dev=" << data.dev.rows() << '\n'
      << "test=" << data.test.rows() << '\n'
      << "---\n";
  const std::pair<const char*, const Split*> splits[] = {
      {"train", &data.train}, {"dev", &data.dev}, {"test", &data.test}};
  for (const auto& [name, split] : splits) {
    for (std::size_t i = 0; i < split->rows(); ++i) {
      out << name << ',' << split->labels[i];
      for (double x : split->row(i)) out << ',' << format_double(x);
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

SyntheticDataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());

  std::map<std::string, std::string> header;
  std::string line;
  while (std::getline(in, line) && line != "---") {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("malformed header line: " + line);
    header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto field = [&](const std::string& key) -> const std::string& {
    auto it = header.find(key);
    if (it == header.end()) throw std::runtime_error("dataset header missing '" + key + "'");
    return it->second;
  };
  if (parse_int(field(kMagic)) != kFormatVersion) {
    throw std::runtime_error("unsupported dataset format version");
  }

  SyntheticDataset data;
  DatasetConfig& c = data.config;
  c.n_classes = static_cast<std::size_t>(parse_int(field("n_classes")));
  c.feature_dim = static_cast<std::size_t>(parse_int(field("feature_dim")));
  c.samples_per_class = static_cast<std::size_t>(parse_int(field("samples_per_class")));
  c.noise_scale = parse_double(field("noise_scale"));
  c.seed = static_cast<std::uint64_t>(parse_int(field("seed")));

  std::map<std::string, Split*> by_name{{"train", &data.train}, {"dev", &data.dev}, {"test", &data.test}};
  for (auto& [name, split] : by_name) split->feature_dim = c.feature_dim;

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    auto it = by_name.find(cell);
    if (it == by_name.end()) throw std::runtime_error("unknown split '" + cell + "'");
    Split& dst = *it->second;
    std::getline(row, cell, ',');
    const auto label = static_cast<std::size_t>(parse_int(cell));
    if (label >= c.n_classes) throw std::runtime_error("label out of range: " + cell);
    std::size_t count = 0;
    while (std::getline(row, cell, ',')) {
      dst.features.push_back(parse_double(cell));
      ++count;
    }
    if (count != c.feature_dim) throw std::runtime_error("row has wrong feature count");
    dst.labels.push_back(label);
  }

  for (const auto& [name, split] : by_name) {
    if (split->rows() != static_cast<std::size_t>(parse_int(field(name)))) {
      throw std::runtime_error("row count mismatch in split '" + name + "'");
    }
  }
  return data;
}

bool operator==(const Split& a, const Split& b) {
  return a.feature_dim == b.feature_dim && a.features == b.features && a.labels == b.labels;
}

bool operator==(const SyntheticDataset& a, const SyntheticDataset& b) {
  const DatasetConfig &x = a.config, &y = b.config;
  return x.n_classes == y.n_classes && x.feature_dim == y.feature_dim &&
         x.samples_per_class == y.samples_per_class && x.noise_scale == y.noise_scale &&
         x.seed == y.seed && a.train == b.train && a.dev == b.dev && a.test == b.test;
}

}  // namespace ssm
