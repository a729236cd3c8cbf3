#include "dust/instance_io.hpp"

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "dust/text.hpp"

namespace dust {

namespace {

constexpr std::string_view kMagic = "dust-instance v1";

void write_row(std::ostream& out, const Vector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (k) out << ',';
    out << format_double(v(k));
  }
  out << '\n';
}

void write_row(std::ostream& out, double head, const Vector& v) {
  out << format_double(head);
  for (Eigen::Index k = 0; k < v.size(); ++k) out << ',' << format_double(v(k));
  out << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::string next() {
    if (pending_) {
      std::string line = std::move(*pending_);
      pending_.reset();
      return line;
    }
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty() && line.front() != '#') return line;
    }
    fail("unexpected end of input");
  }

  void unread(std::string line) { pending_ = std::move(line); }

  std::vector<std::string> words() {
    std::istringstream in(next());
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
  }

  // Next line split on spaces; the first word must equal `key`.
  std::vector<std::string> expect(std::string_view key) {
    auto out = words();
    if (out.empty() || out.front() != key) fail("expected '" + std::string(key) + "'");
    return out;
  }

  Vector row(int size) {
    const std::string line = next();
    const auto cells = split(line, ',');
    if (static_cast<int>(cells.size()) != size)
      fail("expected " + std::to_string(size) + " values, got " + std::to_string(cells.size()));
    Vector v(size);
    try {
      for (int k = 0; k < size; ++k) v(k) = parse_double(cells[k]);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    return v;
  }

  template <typename T>
  T number(const std::vector<std::string>& words, std::size_t index) {
    if (index >= words.size()) fail("missing field");
    try {
      if constexpr (std::is_floating_point_v<T>) return parse_double(words[index]);
      else return parse_int<T>(words[index]);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw std::invalid_argument("instance line " + std::to_string(line_no_) + ": " + what);
  }

 private:
  std::istream& in_;
  std::optional<std::string> pending_;
  int line_no_ = 0;
};

std::shared_ptr<const CostModel> read_cost(LineReader& r, const std::string& family,
                                           const std::vector<NodeProblem>& nodes) {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> dims;
  for (const auto& node : nodes) dims.push_back(node.set.dim());

  if (family == "quadratic_pev") {
    const auto seed = r.number<std::uint64_t>(r.expect("seed"), 1);
    const auto words = r.expect("ranges");
    PevQuadraticCost::Ranges ranges{r.number<double>(words, 1), r.number<double>(words, 2),
                                    r.number<double>(words, 3), r.number<double>(words, 4)};
    return std::make_shared<PevQuadraticCost>(seed, dims, ranges);
  }
  if (family == "table") {
    std::vector<std::vector<QuadraticCoeffs>> table(n);
    for (int i = 0; i < n; ++i) {
      const auto words = r.expect("rows");
      const int rows = r.number<int>(words, 1);
      if (rows < 1) r.fail("cost table needs at least one row");
      for (int k = 0; k < rows; ++k) {
        const Vector v = r.row(dims[i] + 1);
        table[i].push_back({v(0), v.tail(dims[i])});
      }
    }
    return std::make_shared<TableQuadraticCost>(std::move(table));
  }
  if (family == "piecewise_linear") {
    const auto seed = r.number<std::uint64_t>(r.expect("seed"), 1);
    const auto words = r.expect("targets");
    const double lo = r.number<double>(words, 1), hi = r.number<double>(words, 2);
    std::vector<Vector> weights;
    for (int i = 0; i < n; ++i) weights.push_back(r.row(dims[i]));
    return std::make_shared<PiecewiseLinearCost>(seed, std::move(weights), lo, hi);
  }
  r.fail("unknown cost family '" + family + "'");
}

}  // namespace

void PevQuadraticCost::write(std::ostream& out) const {
  out << "seed " << seed_ << '\n'
      << "ranges " << format_double(ranges_.a_lo) << ' ' << format_double(ranges_.a_hi) << ' '
      << format_double(ranges_.b_lo) << ' ' << format_double(ranges_.b_hi) << '\n';
}

void TableQuadraticCost::write(std::ostream& out) const {
  for (const auto& rows : table_) {
    out << "rows " << rows.size() << '\n';
    for (const auto& q : rows) write_row(out, q.curvature, q.linear);
  }
}

void PiecewiseLinearCost::write(std::ostream& out) const {
  out << "seed " << seed_ << '\n'
      << "targets " << format_double(target_lo_) << ' ' << format_double(target_hi_) << '\n';
  for (const auto& w : weights_) write_row(out, w);
}

void write_instance(std::ostream& out, const ProblemInstance& inst) {
  out << kMagic << '\n' << "nodes " << inst.size() << '\n' << "coupling " << inst.coupling_dim() << '\n';
  for (int i = 0; i < inst.size(); ++i) {
    const auto& node = inst.node(i);
    const auto& set = node.set;
    out << "node " << i << '\n';
    switch (set.kind()) {
      case FeasibleSet::Kind::box:
        out << "set box " << set.dim() << '\n';
        write_row(out, set.lo());
        write_row(out, set.hi());
        break;
      case FeasibleSet::Kind::capped_box:
        out << "set capped_box " << set.dim() << ' ' << format_double(set.min_total()) << '\n';
        write_row(out, set.lo());
        write_row(out, set.hi());
        break;
      case FeasibleSet::Kind::ball:
        out << "set ball " << set.dim() << '\n';
        write_row(out, set.center());
        out << "radius " << format_double(set.radius()) << '\n';
        break;
    }
    const Matrix& A = node.constraint.A;
    out << "A " << A.rows() << ' ' << A.cols() << '\n';
    for (Eigen::Index j = 0; j < A.rows(); ++j) write_row(out, A.row(j).transpose());
    out << "b\n";
    write_row(out, node.constraint.b);
    out << "feasible\n";
    write_row(out, inst.feasible_point()[i]);
  }
  if (const auto& s = inst.slater()) {
    out << "slater " << format_double(s->margin) << '\n';
    for (const auto& w : s->witness) write_row(out, w);
  }
  out << "cost " << inst.cost().family() << '\n';
  inst.cost().write(out);
  out << "end\n";
}

std::string instance_to_string(const ProblemInstance& inst) {
  std::ostringstream os;
  write_instance(os, inst);
  return os.str();
}

ProblemInstance read_instance(std::istream& in) {
  LineReader r(in);
  if (r.next() != kMagic) r.fail("missing header '" + std::string(kMagic) + "'");
  const int n = r.number<int>(r.expect("nodes"), 1);
  const int p = r.number<int>(r.expect("coupling"), 1);
  if (n < 1 || p < 0) r.fail("bad node or coupling count");

  std::vector<NodeProblem> nodes;
  std::vector<Vector> feasible;
  for (int i = 0; i < n; ++i) {
    if (r.number<int>(r.expect("node"), 1) != i) r.fail("node blocks must be numbered 0..N-1 in order");
    const auto set_words = r.expect("set");
    if (set_words.size() < 3) r.fail("set needs a kind and a dimension");
    const std::string& kind = set_words[1];
    const int d = r.number<int>(set_words, 2);
    if (d < 1) r.fail("dimension must be positive");

    std::optional<FeasibleSet> set;
    try {
      if (kind == "box" || kind == "capped_box") {
        Vector lo = r.row(d);
        Vector hi = r.row(d);
        set = kind == "box" ? FeasibleSet::box(lo, hi)
                            : FeasibleSet::capped_box(lo, hi, r.number<double>(set_words, 3));
      } else if (kind == "ball") {
        Vector center = r.row(d);
        set = FeasibleSet::ball(center, r.number<double>(r.expect("radius"), 1));
      } else {
        r.fail("unknown set kind '" + kind + "'");
      }
    } catch (const std::invalid_argument& e) {
      if (std::string_view(e.what()).starts_with("instance line")) throw;
      r.fail(e.what());
    }

    const auto a_words = r.expect("A");
    const int rows = r.number<int>(a_words, 1), cols = r.number<int>(a_words, 2);
    if (rows != p || cols != d) r.fail("A must be coupling x dimension");
    Matrix A(rows, cols);
    for (int j = 0; j < rows; ++j) A.row(j) = r.row(cols).transpose();
    r.expect("b");
    Vector b = r.row(p);
    r.expect("feasible");
    feasible.push_back(r.row(d));
    nodes.push_back({*set, AffineConstraint{std::move(A), std::move(b)}});
  }

  std::optional<SlaterCertificate> slater;
  const std::string line = r.next();
  r.unread(line);
  if (line.starts_with("slater")) {
    SlaterCertificate cert;
    cert.margin = r.number<double>(r.expect("slater"), 1);
    for (int i = 0; i < n; ++i) cert.witness.push_back(r.row(nodes[i].set.dim()));
    slater = std::move(cert);
  }
  const auto cost_words = r.expect("cost");
  if (cost_words.size() != 2) r.fail("cost needs a family name");
  auto cost = read_cost(r, cost_words[1], nodes);
  r.expect("end");
  try {
    return ProblemInstance(std::move(nodes), std::move(cost), std::move(feasible), std::move(slater));
  } catch (const std::invalid_argument& e) {
    r.fail(e.what());
  }
}

std::uint64_t ProblemInstance::fingerprint() const {
  // FNV-1a over the serialized form.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : instance_to_string(*this)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open instance file " + path);
  return read_instance(in);
}

}  // namespace dust
