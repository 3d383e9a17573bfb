#include "idense/embed.hpp"

#include <json.hpp>

#include <charconv>
#include <iostream>

#include "idense/io.hpp"

namespace idense {

std::string EmbeddingTable::key(std::string_view word) const {
  return casefold_ ? io::to_lower(word) : std::string(word);
}

bool EmbeddingTable::insert(std::string_view word, const Eigen::Ref<const Eigen::VectorXd>& vector) {
  if (vector.size() != dim_)
    throw ValidationError("embedding for '" + std::string(word) + "' has dimension " + std::to_string(vector.size()) +
                          ", expected " + std::to_string(dim_));
  auto k = key(word);
  if (index_.count(k)) return false;
  index_.emplace(k, static_cast<Eigen::Index>(words_.size()));
  words_.push_back(std::move(k));
  data_.insert(data_.end(), vector.data(), vector.data() + dim_);
  return true;
}

std::optional<Eigen::Index> EmbeddingTable::find(std::string_view word) const {
  auto it = index_.find(key(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Eigen::VectorXd> EmbeddingTable::lookup(std::string_view word) const {
  auto i = find(word);
  if (!i) return std::nullopt;
  return Eigen::VectorXd(row(*i));
}

namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_count(std::string_view s) {
  long long v;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace

EmbeddingTable parse_embeddings(std::string_view text, int expected_dim, bool casefold, std::string_view context) {
  if (expected_dim < 1) throw ConfigError("embedding dimension must be positive");
  EmbeddingTable table(expected_dim, casefold);
  const std::string ctx(context);
  Eigen::VectorXd v(expected_dim);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    auto f = fields(line);
    if (f.empty()) continue;
    if (line_no == 1 && f.size() == 2 && is_count(f[0]) && is_count(f[1]) && expected_dim != 1) {
      if (std::stoi(std::string(f[1])) != expected_dim)
        throw ParseError(ctx + ": header declares dimension " + std::string(f[1]) + ", expected " +
                             std::to_string(expected_dim),
                         line_no);
      continue;
    }
    if (static_cast<int>(f.size()) != expected_dim + 1)
      throw ParseError(ctx + ": expected a word and " + std::to_string(expected_dim) + " values, found " +
                           std::to_string(f.size() - 1) + " values",
                       line_no);
    for (int d = 0; d < expected_dim; ++d) {
      auto s = f[static_cast<std::size_t>(d) + 1];
      double x;
      auto r = std::from_chars(s.data(), s.data() + s.size(), x);
      if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(x))
        throw ParseError(ctx + ": bad value '" + std::string(s) + "'", line_no);
      v(d) = x;
    }
    if (!table.insert(f[0], v)) table.count_duplicate();
  }
  if (table.size() == 0) throw ParseError(ctx + ": no embeddings found");
  if (table.duplicates())
    std::cerr << "warning: " << ctx << ": " << table.duplicates() << " duplicate word(s), first vector kept\n";
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path, int expected_dim, bool casefold) {
  return parse_embeddings(io::read_file(path), expected_dim, casefold, path.string());
}

ClusterModel fit_cluster_model(const std::vector<std::string>& words, const EmbeddingTable& table,
                               const KMeansOptions& options) {
  std::vector<std::string> used;
  std::vector<Eigen::Index> rows;
  for (const auto& w : words)
    if (auto i = table.find(w)) {
      used.push_back(w);
      rows.push_back(*i);
    }
  ClusterModel::Matrix points(static_cast<Eigen::Index>(rows.size()), table.dimension());
  for (std::size_t r = 0; r < rows.size(); ++r) points.row(static_cast<Eigen::Index>(r)) = table.row(rows[r]);
  auto result = kmeans(points, options);
  fit_cluster_stats(result.model, points);
  result.model.training_vocab = std::move(used);
  return std::move(result.model);
}

std::string cluster_model_to_json(const ClusterModel& model) {
  nlohmann::json j;
  j["format"] = "idense-cluster-model";
  j["version"] = kClusterModelFormatVersion;
  j["k"] = model.k();
  j["dimension"] = model.dimension();
  j["seed"] = model.seed;
  auto& cs = j["centroids"] = nlohmann::json::array();
  for (Eigen::Index c = 0; c < model.k(); ++c) {
    std::vector<double> row(model.centroids.row(c).data(), model.centroids.row(c).data() + model.dimension());
    cs.push_back(row);
  }
  j["mu"] = std::vector<double>(model.mu.data(), model.mu.data() + model.mu.size());
  j["sigma"] = std::vector<double>(model.sigma.data(), model.sigma.data() + model.sigma.size());
  j["training_vocab"] = model.training_vocab;
  return j.dump(1);
}

ClusterModel cluster_model_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("cluster model: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kClusterModelFormatVersion)
      throw ParseError("cluster model: unsupported format version " + j.at("version").dump());
    const auto k = j.at("k").get<Eigen::Index>();
    const auto dim = j.at("dimension").get<Eigen::Index>();
    ClusterModel m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.centroids.resize(k, dim);
    const auto& cs = j.at("centroids");
    if (static_cast<Eigen::Index>(cs.size()) != k) throw ParseError("cluster model: centroid count differs from k");
    for (Eigen::Index c = 0; c < k; ++c) {
      auto row = cs.at(static_cast<std::size_t>(c)).get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != dim) throw ParseError("cluster model: centroid dimension mismatch");
      for (Eigen::Index d = 0; d < dim; ++d) m.centroids(c, d) = row[static_cast<std::size_t>(d)];
    }
    auto mu = j.at("mu").get<std::vector<double>>();
    auto sigma = j.at("sigma").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(mu.size()) != k || static_cast<Eigen::Index>(sigma.size()) != k)
      throw ParseError("cluster model: mu/sigma length differs from k");
    m.mu = Eigen::Map<Eigen::VectorXd>(mu.data(), k);
    m.sigma = Eigen::Map<Eigen::VectorXd>(sigma.data(), k);
    m.training_vocab = j.at("training_vocab").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("cluster model: ") + e.what());
  }
}

void save_cluster_model(const ClusterModel& model, const std::filesystem::path& path) {
  io::write_file_atomic(path, cluster_model_to_json(model));
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  return cluster_model_from_json(io::read_file(path));
}

}  // namespace idense
