#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gumbelbox/boxes.hpp"
#include "gumbelbox/rng.hpp"

// Directed acyclic graphs over interned labels, with eagerly computed
// transitive closure and reduction; tree generators; train/eval splits; and
// TSV ingestion for edge lists and conditional-probability tables.

namespace gumbelbox {

using IndexEdge = std::pair<int, int>;

// Graphs are fully analyzed at construction (cycle check, closure, reduction)
// and immutable afterwards, so instances can be shared across threads.
// Closure is stored densely; node count is capped accordingly.
inline constexpr int max_graph_nodes = 20000;

class EdgeGraph {
 public:
  EdgeGraph(std::vector<std::string> labels, const std::vector<IndexEdge>& edges)
      : labels_(std::move(labels)) {
    const int n = static_cast<int>(labels_.size());
    if (n > max_graph_nodes)
      throw std::overflow_error("EdgeGraph: node count exceeds supported maximum");
    index_.reserve(labels_.size());
    for (int i = 0; i < n; ++i) {
      if (!index_.emplace(labels_[i], i).second)
        throw std::invalid_argument("EdgeGraph: duplicate label: " + labels_[i]);
    }

    std::vector<std::vector<char>> seen(static_cast<std::size_t>(n));
    adj_.resize(static_cast<std::size_t>(n));
    for (const IndexEdge& e : edges) {
      if (e.first < 0 || e.first >= n || e.second < 0 || e.second >= n)
        throw std::out_of_range("EdgeGraph: edge endpoint out of range");
      if (e.first == e.second)
        throw std::invalid_argument("EdgeGraph: self-loop forms a cycle");
      auto& row = seen[static_cast<std::size_t>(e.first)];
      if (row.empty()) row.assign(static_cast<std::size_t>(n), 0);
      if (row[static_cast<std::size_t>(e.second)]) continue; // deduplicate
      row[static_cast<std::size_t>(e.second)] = 1;
      edges_.push_back(e);
      adj_[static_cast<std::size_t>(e.first)].push_back(e.second);
    }

    check_acyclic();
    compute_closure();
    compute_reduction();
  }

  static EdgeGraph from_labeled_edges(
      const std::vector<std::pair<std::string, std::string>>& labeled) {
    std::vector<std::string> labels;
    std::unordered_map<std::string, int> index;
    auto intern = [&](const std::string& s) {
      auto it = index.find(s);
      if (it != index.end()) return it->second;
      const int id = static_cast<int>(labels.size());
      labels.push_back(s);
      index.emplace(s, id);
      return id;
    };
    std::vector<IndexEdge> edges;
    edges.reserve(labeled.size());
    for (const auto& [p, c] : labeled) {
      const int pi = intern(p); // parent interned before child: first-seen order
      const int ci = intern(c);
      edges.emplace_back(pi, ci);
    }
    return EdgeGraph(std::move(labels), edges);
  }

  int n_nodes() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }
  int index_of(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) throw std::out_of_range("EdgeGraph: unknown label: " + label);
    return it->second;
  }

  const std::vector<IndexEdge>& edges() const { return edges_; }
  const std::vector<IndexEdge>& closure_edges() const { return closure_edges_; }
  const std::vector<IndexEdge>& reduction_edges() const { return reduction_edges_; }

  bool in_closure(int u, int v) const {
    if (u < 0 || u >= n_nodes() || v < 0 || v >= n_nodes())
      throw std::out_of_range("EdgeGraph::in_closure: node out of range");
    return reach_[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)];
  }

 private:
  void check_acyclic() const {
    const int n = n_nodes();
    std::vector<int> indeg(static_cast<std::size_t>(n), 0);
    for (const IndexEdge& e : edges_) ++indeg[static_cast<std::size_t>(e.second)];
    std::vector<int> queue;
    queue.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      if (indeg[static_cast<std::size_t>(i)] == 0) queue.push_back(i);
    std::size_t head = 0;
    int removed = 0;
    while (head < queue.size()) {
      const int u = queue[head++];
      ++removed;
      for (int v : adj_[static_cast<std::size_t>(u)])
        if (--indeg[static_cast<std::size_t>(v)] == 0) queue.push_back(v);
    }
    if (removed != n) throw std::invalid_argument("EdgeGraph: graph contains a cycle");
  }

  void compute_closure() {
    const int n = n_nodes();
    reach_.assign(static_cast<std::size_t>(n),
                  std::vector<bool>(static_cast<std::size_t>(n), false));
    std::vector<int> stack;
    for (int s = 0; s < n; ++s) {
      auto& row = reach_[static_cast<std::size_t>(s)];
      stack.assign(adj_[static_cast<std::size_t>(s)].begin(),
                   adj_[static_cast<std::size_t>(s)].end());
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (row[static_cast<std::size_t>(u)]) continue;
        row[static_cast<std::size_t>(u)] = true;
        for (int v : adj_[static_cast<std::size_t>(u)])
          if (!row[static_cast<std::size_t>(v)]) stack.push_back(v);
      }
    }
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        if (reach_[static_cast<std::size_t>(u)][static_cast<std::size_t>(v)])
          closure_edges_.emplace_back(u, v);
  }

  void compute_reduction() {
    // An edge is redundant exactly when some other direct successor of its
    // tail already reaches its head.
    for (const IndexEdge& e : edges_) {
      bool redundant = false;
      for (int w : adj_[static_cast<std::size_t>(e.first)]) {
        if (w != e.second &&
            reach_[static_cast<std::size_t>(w)][static_cast<std::size_t>(e.second)]) {
          redundant = true;
          break;
        }
      }
      if (!redundant) reduction_edges_.push_back(e);
    }
    std::sort(reduction_edges_.begin(), reduction_edges_.end());
  }

  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
  std::vector<std::vector<int>> adj_;
  std::vector<IndexEdge> edges_;
  std::vector<IndexEdge> closure_edges_;
  std::vector<IndexEdge> reduction_edges_;
  std::vector<std::vector<bool>> reach_;
};

namespace detail {

inline std::vector<std::string> numbered_labels(const std::string& prefix, int n) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels.push_back(prefix + std::to_string(i));
  return labels;
}

} // namespace detail

// Perfect b-ary tree with `levels` levels (a single root at level 0), nodes
// numbered breadth-first, edges oriented parent -> child.
inline EdgeGraph gen_balanced_tree(int branching, int levels) {
  if (branching < 1) throw std::invalid_argument("gen_balanced_tree: branching must be >= 1");
  if (levels < 1) throw std::invalid_argument("gen_balanced_tree: levels must be >= 1");
  std::uint64_t count = 0, width = 1;
  for (int l = 0; l < levels; ++l) {
    count += width;
    if (count > static_cast<std::uint64_t>(max_graph_nodes))
      throw std::overflow_error("gen_balanced_tree: node count exceeds supported maximum");
    if (l + 1 < levels) {
      if (width > static_cast<std::uint64_t>(max_graph_nodes) / static_cast<std::uint64_t>(branching))
        throw std::overflow_error("gen_balanced_tree: node count exceeds supported maximum");
      width *= static_cast<std::uint64_t>(branching);
    }
  }
  const int n = static_cast<int>(count);
  std::vector<IndexEdge> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  int level_start = 0, level_size = 1, next = 1;
  for (int l = 0; l + 1 < levels; ++l) {
    for (int p = level_start; p < level_start + level_size; ++p)
      for (int c = 0; c < branching; ++c) edges.emplace_back(p, next++);
    level_start += level_size;
    level_size *= branching;
  }
  return EdgeGraph(detail::numbered_labels("n", n), edges);
}

// Uniform random labeled tree (random generating sequence decoded to a
// tree), rooted at node 0 with edges oriented away from the root.
inline EdgeGraph gen_random_tree(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("gen_random_tree: need at least 2 nodes");
  if (n > max_graph_nodes)
    throw std::overflow_error("gen_random_tree: node count exceeds supported maximum");
  Rng rng(seed);
  std::vector<int> seq(static_cast<std::size_t>(n - 2));
  for (int& s : seq) s = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

  std::vector<int> degree(static_cast<std::size_t>(n), 1);
  for (int s : seq) ++degree[static_cast<std::size_t>(s)];
  std::set<int> leaves;
  for (int i = 0; i < n; ++i)
    if (degree[static_cast<std::size_t>(i)] == 1) leaves.insert(i);

  std::vector<std::vector<int>> und(static_cast<std::size_t>(n));
  auto join = [&](int a, int b) {
    und[static_cast<std::size_t>(a)].push_back(b);
    und[static_cast<std::size_t>(b)].push_back(a);
  };
  for (int s : seq) {
    const int leaf = *leaves.begin();
    leaves.erase(leaves.begin());
    join(leaf, s);
    if (--degree[static_cast<std::size_t>(s)] == 1) leaves.insert(s);
  }
  const int a = *leaves.begin();
  const int b = *std::next(leaves.begin());
  join(a, b);

  // orient away from the root by BFS
  std::vector<IndexEdge> edges;
  edges.reserve(static_cast<std::size_t>(n - 1));
  std::vector<char> visited(static_cast<std::size_t>(n), 0);
  std::vector<int> queue{0};
  visited[0] = 1;
  std::size_t head = 0;
  while (head < queue.size()) {
    const int u = queue[head++];
    for (int v : und[static_cast<std::size_t>(u)]) {
      if (visited[static_cast<std::size_t>(v)]) continue;
      visited[static_cast<std::size_t>(v)] = 1;
      edges.emplace_back(u, v);
      queue.push_back(v);
    }
  }
  return EdgeGraph(detail::numbered_labels("n", n), edges);
}

// ---- Train/eval splits ----

enum class TrainSource { ClosureSample, Reduction };

struct SplitSpec {
  TrainSource train_source = TrainSource::ClosureSample;
  int eval_edges = 0;     // positives sampled from the closure
  int negative_ratio = 1; // negatives per positive, all outside the closure
  std::uint64_t seed = 0;
};

struct DataSplits {
  std::vector<IndexEdge> train_edges;
  std::vector<IndexEdge> eval_edges;
  std::vector<IndexEdge> eval_negatives;
};

inline DataSplits make_splits(const EdgeGraph& g, const SplitSpec& spec) {
  const auto& closure = g.closure_edges();
  if (spec.eval_edges < 0 || spec.eval_edges > static_cast<int>(closure.size()))
    throw std::invalid_argument("make_splits: eval_edges outside [0, closure size]");
  if (spec.negative_ratio < 0)
    throw std::invalid_argument("make_splits: negative_ratio must be >= 0");

  const std::int64_t n = g.n_nodes();
  const std::int64_t needed =
      static_cast<std::int64_t>(spec.eval_edges) * spec.negative_ratio;
  const std::int64_t available = n * (n - 1) - static_cast<std::int64_t>(closure.size());
  if (needed > available)
    throw std::invalid_argument("make_splits: not enough non-closure pairs for negatives");

  DataSplits out;
  out.train_edges =
      spec.train_source == TrainSource::ClosureSample ? closure : g.reduction_edges();

  Rng rng(spec.seed);
  std::vector<IndexEdge> pool = closure;
  rng.shuffle(pool.begin(), pool.end());
  out.eval_edges.assign(pool.begin(), pool.begin() + spec.eval_edges);

  std::unordered_set<std::int64_t> taken;
  taken.reserve(static_cast<std::size_t>(needed) * 2 + 1);
  std::int64_t budget = 1000 * needed + 1000;
  while (static_cast<std::int64_t>(out.eval_negatives.size()) < needed && budget-- > 0) {
    const int u = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    if (u == v || g.in_closure(u, v)) continue;
    const std::int64_t key = static_cast<std::int64_t>(u) * n + v;
    if (!taken.insert(key).second) continue;
    out.eval_negatives.emplace_back(u, v);
  }
  if (static_cast<std::int64_t>(out.eval_negatives.size()) < needed) {
    // Dense closure starves rejection sampling; finish by enumeration, still
    // deterministic under the same seed.
    std::vector<IndexEdge> rest;
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v) {
        if (u == v || g.in_closure(u, v)) continue;
        if (taken.count(static_cast<std::int64_t>(u) * n + v)) continue;
        rest.emplace_back(u, v);
      }
    rng.shuffle(rest.begin(), rest.end());
    for (const IndexEdge& e : rest) {
      if (static_cast<std::int64_t>(out.eval_negatives.size()) >= needed) break;
      out.eval_negatives.push_back(e);
    }
  }
  return out;
}

// ---- Conditional-probability tables ----

struct ProbRow {
  int a, b;
  double p;
};

struct ProbTable {
  std::vector<std::string> labels;
  std::vector<ProbRow> rows;
};

namespace detail {

// Exact conditional P(a|b) of axis-aligned boxes; no probability clamping so
// disjoint pairs give exactly 0 and identical boxes exactly 1.
inline double hard_conditional_raw(const DecodedBoxes& boxes, int a, int b) {
  double num = 1.0, den = 1.0;
  for (int j = 0; j < boxes.d; ++j) {
    const double lo = std::max(boxes.mins(a)[j], boxes.mins(b)[j]);
    const double hi = std::min(boxes.maxes(a)[j], boxes.maxes(b)[j]);
    num *= hi > lo ? hi - lo : 0.0;
    den *= boxes.maxes(b)[j] - boxes.mins(b)[j];
  }
  return num / den;
}

} // namespace detail

// Samples distinct ordered entity pairs from a planted hard-box model and
// records their exact conditional probabilities as regression targets.
inline ProbTable make_synthetic_probtable(const BoxParams& planted, int pairs,
                                          std::uint64_t seed) {
  const auto n = static_cast<std::int64_t>(planted.n_entities);
  if (n < 2) throw std::invalid_argument("make_synthetic_probtable: need >= 2 entities");
  const std::int64_t max_pairs = n * (n - 1);
  if (pairs < 0 || pairs > max_pairs)
    throw std::invalid_argument("make_synthetic_probtable: pairs outside [0, n*(n-1)]");

  const DecodedBoxes boxes = decode_all(planted);
  Rng rng(seed);
  std::vector<std::pair<int, int>> chosen;
  if (pairs > max_pairs / 2) {
    std::vector<std::pair<int, int>> all;
    all.reserve(static_cast<std::size_t>(max_pairs));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (a != b) all.emplace_back(a, b);
    rng.shuffle(all.begin(), all.end());
    chosen.assign(all.begin(), all.begin() + pairs);
  } else {
    std::unordered_set<std::int64_t> taken;
    taken.reserve(static_cast<std::size_t>(pairs) * 2 + 1);
    while (static_cast<int>(chosen.size()) < pairs) {
      const int a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      const int b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      if (a == b) continue;
      if (!taken.insert(static_cast<std::int64_t>(a) * n + b).second) continue;
      chosen.emplace_back(a, b);
    }
  }

  ProbTable table;
  table.labels = detail::numbered_labels("e", static_cast<int>(n));
  table.rows.reserve(chosen.size());
  for (const auto& [a, b] : chosen)
    table.rows.push_back({a, b, detail::hard_conditional_raw(boxes, a, b)});
  return table;
}

// ---- TSV ingestion ----

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

[[noreturn]] inline void parse_fail(const std::string& path, int line_no,
                                    const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

template <class PerLine>
inline void for_tsv_lines(const std::string& path, const PerLine& fn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    fn(line, line_no);
  }
}

} // namespace detail

// Lines of "parent<TAB>child"; labels interned in first-seen order, duplicate
// edges dropped.
inline EdgeGraph load_edges(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> labeled;
  detail::for_tsv_lines(path, [&](const std::string& line, int line_no) {
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      detail::parse_fail(path, line_no, "expected 'parent<TAB>child'");
    labeled.emplace_back(fields[0], fields[1]);
  });
  return EdgeGraph::from_labeled_edges(labeled);
}

// Lines of "a<TAB>b<TAB>p" with p a finite probability; (a, b) must be unique.
inline ProbTable load_probtable(const std::string& path) {
  ProbTable table;
  std::unordered_map<std::string, int> index;
  auto intern = [&](const std::string& s) {
    auto it = index.find(s);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(table.labels.size());
    table.labels.push_back(s);
    index.emplace(s, id);
    return id;
  };
  std::unordered_set<std::int64_t> seen;
  detail::for_tsv_lines(path, [&](const std::string& line, int line_no) {
    const auto fields = detail::split_tabs(line);
    if (fields.size() != 3 || fields[0].empty() || fields[1].empty() || fields[2].empty())
      detail::parse_fail(path, line_no, "expected 'a<TAB>b<TAB>p'");
    double p = 0.0;
    try {
      std::size_t consumed = 0;
      p = std::stod(fields[2], &consumed);
      if (consumed != fields[2].size())
        detail::parse_fail(path, line_no, "trailing characters after probability");
    } catch (const std::invalid_argument&) {
      detail::parse_fail(path, line_no, "probability is not a number");
    } catch (const std::out_of_range&) {
      detail::parse_fail(path, line_no, "probability out of double range");
    }
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      detail::parse_fail(path, line_no, "probability outside [0, 1]");
    const int a = intern(fields[0]);
    const int b = intern(fields[1]);
    if (!seen.insert((static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b))
             .second)
      detail::parse_fail(path, line_no, "duplicate (a, b) pair");
    table.rows.push_back({a, b, p});
  });
  return table;
}

// ---- TSV output ----

enum class EdgeSet { Direct, Closure, Reduction };

inline void save_edges(const EdgeGraph& g, EdgeSet which, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  const std::vector<IndexEdge>& edges = which == EdgeSet::Direct ? g.edges()
                                        : which == EdgeSet::Closure
                                            ? g.closure_edges()
                                            : g.reduction_edges();
  for (const IndexEdge& e : edges)
    out << g.labels()[static_cast<std::size_t>(e.first)] << '\t'
        << g.labels()[static_cast<std::size_t>(e.second)] << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline void save_probtable(const ProbTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.precision(17);
  for (const ProbRow& r : table.rows)
    out << table.labels[static_cast<std::size_t>(r.a)] << '\t'
        << table.labels[static_cast<std::size_t>(r.b)] << '\t' << r.p << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace gumbelbox
