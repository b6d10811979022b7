#include "greater/connect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <unordered_map>

#include "greater/csv.hpp"
#include "greater/error.hpp"
#include "greater/random.hpp"

namespace greater {

Contingency contingency(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() != b.size())
    fail(ErrorKind::validation, "column lengths differ (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
  std::unordered_map<std::string_view, std::size_t> ra, cb;
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    auto i = ra.try_emplace(a[k], ra.size()).first->second;
    auto j = cb.try_emplace(b[k], cb.size()).first->second;
    cells.emplace_back(i, j);
  }
  Contingency t{ra.size(), cb.size(), std::vector<std::uint64_t>(ra.size() * cb.size(), 0)};
  for (auto [i, j] : cells) ++t.counts[i * t.cols + j];
  return t;
}

double cramers_v(const Contingency& table, CramersVOptions options) {
  std::vector<std::int64_t> row_sum(table.rows, 0), col_sum(table.cols, 0);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < table.rows; ++i) {
    for (std::size_t j = 0; j < table.cols; ++j) {
      const auto v = static_cast<std::int64_t>(table.at(i, j));
      row_sum[i] += v;
      col_sum[j] += v;
      total += v;
    }
  }
  const auto r = static_cast<double>(std::count_if(row_sum.begin(), row_sum.end(), [](auto s) { return s > 0; }));
  const auto c = static_cast<double>(std::count_if(col_sum.begin(), col_sum.end(), [](auto s) { return s > 0; }));
  const auto n = static_cast<double>(total);
  if (total < 2 || r < 2.0 || c < 2.0) return 0.0;

  // phi2 = sum (O_ij N - R_i C_j)^2 / (R_i C_j N^2), differences taken exactly in integers
  double phi2 = 0.0;
  for (std::size_t i = 0; i < table.rows; ++i) {
    if (row_sum[i] == 0) continue;
    for (std::size_t j = 0; j < table.cols; ++j) {
      if (col_sum[j] == 0) continue;
      const auto d = static_cast<double>(static_cast<std::int64_t>(table.at(i, j)) * total - row_sum[i] * col_sum[j]);
      phi2 += d / (static_cast<double>(row_sum[i]) * n) * (d / (static_cast<double>(col_sum[j]) * n));
    }
  }

  double v;
  if (options.bias_corrected) {
    const double phi2c = std::max(0.0, phi2 - (r - 1.0) * (c - 1.0) / (n - 1.0));
    const double rc = r - (r - 1.0) * (r - 1.0) / (n - 1.0);
    const double cc = c - (c - 1.0) * (c - 1.0) / (n - 1.0);
    const double denom = std::min(rc - 1.0, cc - 1.0);
    if (denom <= 0.0) return 0.0;
    v = std::sqrt(phi2c / denom);
  } else {
    v = std::sqrt(phi2 / std::min(r - 1.0, c - 1.0));
  }
  return std::clamp(v, 0.0, 1.0);
}

double cramers_v(std::span<const std::string> a, std::span<const std::string> b, CramersVOptions options) {
  return cramers_v(contingency(a, b), options);
}

AssociationMatrix::AssociationMatrix(std::vector<std::string> labels, std::vector<double> values)
    : labels_(std::move(labels)), values_(std::move(values)) {
  const auto k = labels_.size();
  if (values_.size() != k * k) fail(ErrorKind::validation, "association matrix must be square");
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double v = at(i, j);
      if (!(v >= 0.0 && v <= 1.0)) fail(ErrorKind::validation, "association entries must lie in [0, 1]");
      if (v != at(j, i)) fail(ErrorKind::validation, "association matrix must be symmetric");
    }
    if (at(i, i) != 1.0) fail(ErrorKind::validation, "association matrix diagonal must be 1");
  }
}

std::vector<double> AssociationMatrix::off_diagonal() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) out.push_back(at(i, j));
  return out;
}

std::string AssociationMatrix::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  std::vector<std::string> header{""};
  header.insert(header.end(), labels_.begin(), labels_.end());
  out << format_csv_record(header) << '\n';
  for (std::size_t i = 0; i < size(); ++i) {
    out << format_csv_record({labels_[i]});
    for (std::size_t j = 0; j < size(); ++j) out << ',' << at(i, j);
    out << '\n';
  }
  return out.str();
}

std::string AssociationMatrix::to_long_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "col_a,col_b,v\n";
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j)
      out << format_csv_record({labels_[i], labels_[j]}) << ',' << at(i, j) << '\n';
  return out.str();
}

AssociationMatrix association_matrix(const Table& table, std::span<const std::string> cols, CramersVOptions options) {
  std::vector<std::vector<std::string>> values;
  for (const auto& name : cols) {
    const auto c = table.column_index(name);
    if (table.schema()[c].modality != Modality::categorical)
      fail(ErrorKind::validation, "association analysis needs categorical columns; '" + name + "' is not");
    values.push_back(table.column_values(c));
  }
  const auto k = cols.size();
  std::vector<double> m(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    m[i * k + i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) m[i * k + j] = m[j * k + i] = cramers_v(values[i], values[j], options);
  }
  return AssociationMatrix({cols.begin(), cols.end()}, std::move(m));
}

Table exclude_noisy_columns(const Table& table, std::span<const std::string> cols) {
  for (const auto& name : cols) {
    const auto c = table.column_index(name);
    if (table.schema()[c].role == Role::subject_id)
      fail(ErrorKind::validation, "cannot exclude the subject column '" + name + "'");
  }
  auto out = drop_columns(table, cols);
  if (out.payload_names().empty())
    fail(ErrorKind::validation, "excluding these columns leaves no payload column to connect");
  return out;
}

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

IndependencePartition threshold_independent(const AssociationMatrix& matrix, Threshold threshold) {
  if (matrix.size() < 2) fail(ErrorKind::validation, "independence analysis needs at least two columns");
  IndependencePartition out;
  const auto off = matrix.off_diagonal();
  switch (threshold.kind) {
    case Threshold::Kind::mean: {
      double sum = 0.0;
      for (double v : off) sum += v;
      out.resolved = sum / static_cast<double>(off.size());
      out.method = "threshold_mean";
      break;
    }
    case Threshold::Kind::median:
      out.resolved = median_of(off);
      out.method = "threshold_median";
      break;
    case Threshold::Kind::fixed:
      if (!std::isfinite(threshold.value)) fail(ErrorKind::validation, "fixed threshold must be finite");
      out.resolved = threshold.value;
      out.method = "threshold_fixed";
      break;
  }
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    bool independent = true;
    for (std::size_t j = 0; j < matrix.size() && independent; ++j)
      if (j != i && !(matrix.at(i, j) < out.resolved)) independent = false;
    (independent ? out.independent_cols : out.core_cols).push_back(matrix.labels()[i]);
  }
  return out;
}

std::vector<Merge> average_linkage(const AssociationMatrix& matrix) {
  const auto n = matrix.size();
  // Distances between active clusters, indexed by cluster id.
  std::vector<std::vector<double>> d(2 * n, std::vector<double>(2 * n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double diff = matrix.at(i, k) - matrix.at(j, k);
        s += diff * diff;
      }
      d[i][j] = std::sqrt(s);
    }
  }
  std::vector<std::size_t> active(n), size(2 * n, 1);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;

  std::vector<Merge> merges;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 1;
    for (std::size_t x = 0; x < active.size(); ++x) {
      for (std::size_t y = x + 1; y < active.size(); ++y) {
        const double v = d[active[x]][active[y]];
        if (v < best) {
          best = v;
          bi = x;
          bj = y;
        }
      }
    }
    const auto a = active[bi], b = active[bj];
    const auto id = n + merges.size();
    size[id] = size[a] + size[b];
    merges.push_back({a, b, best, size[id]});
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
    for (auto k : active) {
      const double v = (static_cast<double>(size[a]) * d[k][a] + static_cast<double>(size[b]) * d[k][b]) /
                       static_cast<double>(size[id]);
      d[k][id] = d[id][k] = v;
    }
    active.push_back(id);
  }
  return merges;
}

IndependencePartition hierarchical_independent(const AssociationMatrix& matrix, Cut cut) {
  const auto n = matrix.size();
  if (n < 2) fail(ErrorKind::validation, "hierarchical clustering needs at least two columns");
  const auto merges = average_linkage(matrix);

  std::size_t applied = 0;
  IndependencePartition out;
  out.method = "hierarchical";
  switch (cut.kind) {
    case Cut::Kind::clusters:
      if (cut.clusters < 1 || cut.clusters > n)
        fail(ErrorKind::validation, "cluster count must lie in [1, " + std::to_string(n) + "]");
      applied = n - cut.clusters;
      out.resolved = applied == 0 ? 0.0 : merges[applied - 1].height;
      break;
    case Cut::Kind::distance:
    case Cut::Kind::median_height: {
      double h = cut.distance;
      if (cut.kind == Cut::Kind::median_height) {
        std::vector<double> heights;
        for (const auto& m : merges) heights.push_back(m.height);
        h = median_of(heights);
      } else if (!(std::isfinite(h) && h >= 0.0)) {
        fail(ErrorKind::validation, "cut distance must be a finite non-negative value");
      }
      while (applied < merges.size() && merges[applied].height <= h) ++applied;
      out.resolved = h;
      break;
    }
  }

  // Union the first `applied` merges and read off cluster sizes.
  std::vector<std::size_t> parent(2 * n);
  for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = i;
  for (std::size_t k = 0; k < applied; ++k) parent[merges[k].left] = parent[merges[k].right] = n + k;
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  std::unordered_map<std::size_t, std::size_t> members;
  for (std::size_t i = 0; i < n; ++i) ++members[root(i)];
  for (std::size_t i = 0; i < n; ++i)
    (members[root(i)] == 1 ? out.independent_cols : out.core_cols).push_back(matrix.labels()[i]);
  return out;
}

void SubjectPools::add(const ColumnSpec& spec, const std::string& subject, std::string value) {
  if (std::none_of(columns_.begin(), columns_.end(), [&](const ColumnSpec& c) { return c.name == spec.name; }))
    columns_.push_back(spec);
  pools_[spec.name][subject].push_back(std::move(value));
}

const std::vector<std::string>* SubjectPools::pool(const std::string& column, const std::string& subject) const {
  auto c = pools_.find(column);
  if (c == pools_.end()) return nullptr;
  auto s = c->second.find(subject);
  if (s == c->second.end() || s->second.empty()) return nullptr;
  return &s->second;
}

const std::map<std::string, std::vector<std::string>>* SubjectPools::pools_of(const std::string& column) const {
  auto c = pools_.find(column);
  return c == pools_.end() ? nullptr : &c->second;
}

std::string SubjectPools::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& spec : columns_) j[spec.name] = pools_.at(spec.name);
  return j.dump(2);
}

CoreReduction reduce_core(const Table& flattened, const IndependencePartition& partition,
                          std::span<const Table> sources) {
  const auto sc = flattened.require_subject_column();
  const auto& subject_name = flattened.schema()[sc].name;
  std::set<std::string> independent;
  for (const auto& name : partition.independent_cols) {
    if (flattened.column_index(name) == sc) fail(ErrorKind::validation, "subject column cannot be independent");
    independent.insert(name);
  }
  for (const auto& name : partition.core_cols) {
    flattened.column_index(name);
    if (independent.contains(name))
      fail(ErrorKind::validation, "column '" + name + "' is both independent and core");
  }

  CoreReduction out;
  for (const auto& name : partition.independent_cols) {
    const Table* source = &flattened;
    for (const auto& t : sources) {
      if (t.find_column(name)) {
        source = &t;
        break;
      }
    }
    const auto ts = source->require_subject_column();
    if (source->schema()[ts].name != subject_name)
      fail(ErrorKind::schema, "pool source for '" + name + "' uses a different subject column");
    const auto c = source->column_index(name);
    for (const auto& row : source->rows()) out.pools.add(source->schema()[c], row[ts], row[c]);
  }
  out.core = distinct_rows(drop_columns(flattened, partition.independent_cols));
  return out;
}

Table bootstrap_append(const Table& core, const SubjectPools& pools, std::uint64_t seed) {
  const auto sc = core.require_subject_column();
  Schema schema = core.schema();
  for (const auto& spec : pools.columns()) {
    if (core.find_column(spec.name)) fail(ErrorKind::schema, "core table already has column '" + spec.name + "'");
    schema.push_back(spec);
  }
  std::vector<Row> rows;
  rows.reserve(core.num_rows());
  for (std::size_t r = 0; r < core.num_rows(); ++r) {
    Row row = core.row(r);
    Rng rng(derive_seed(seed, r));
    for (const auto& spec : pools.columns()) {
      const auto* pool = pools.pool(spec.name, row[sc]);
      if (!pool) fail(ErrorKind::validation, "no pool for subject '" + row[sc] + "' in column '" + spec.name + "'");
      row.push_back((*pool)[rng.index(pool->size())]);
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(schema), std::move(rows));
}

std::string to_json(const IndependencePartition& partition) {
  nlohmann::ordered_json j;
  j["method"] = partition.method;
  j["resolved"] = partition.resolved;
  j["independent"] = partition.independent_cols;
  j["core"] = partition.core_cols;
  return j.dump(2);
}

}  // namespace greater
