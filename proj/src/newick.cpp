#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "tsg/error.hpp"
#include "tsg/tree.hpp"

namespace tsg {

namespace {

std::string format_length(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", w);
  return buf;
}

bool needs_quotes(const std::string& label) {
  for (char c : label)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' ||
        c == ':' || c == ';' || c == '\'' || c == '[' || c == ']')
      return true;
  return false;
}

std::string quote(const std::string& label) {
  if (!needs_quotes(label)) return label;
  std::string out = "'";
  for (char c : label) {
    if (c == '\'') out += '\'';
    out += c;
  }
  return out + "'";
}

void write_subtree(const WeightedTree& t, NodeId v, NodeId from, std::string& out) {
  bool first = true;
  for (const auto& nb : t.neighbors(v)) {
    if (nb.node == from) continue;
    out += first ? "(" : ",";
    first = false;
    write_subtree(t, nb.node, v, out);
    out += ':';
    out += format_length(t.edge(nb.edge).weight);
  }
  if (!first) out += ')';
  out += quote(t.label(v));
}

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  WeightedTree parse() {
    skip_ws();
    NodeId root = subtree();
    skip_ws();
    if (peek() == ':') {  // a root length carries no edge; accept and drop it
      ++pos_;
      number();
      skip_ws();
    }
    expect(';');
    skip_ws();
    if (pos_ != s_.size()) fail("trailing characters after ';'");
    (void)root;
    tree_.set_relaxed(!tree_.satisfies_strict_rules());
    tree_.validate();
    return std::move(tree_);
  }

 private:
  NodeId subtree() {
    NodeId v;
    if (peek() == '(') {
      ++pos_;
      v = tree_.add_node();
      for (;;) {
        skip_ws();
        NodeId child = subtree();
        skip_ws();
        if (peek() != ':') fail("expected ':' and an edge length");
        ++pos_;
        double w = number();
        tree_.add_edge(v, child, w);
        skip_ws();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      skip_ws();
      tree_.set_label(v, label());
    } else {
      std::string l = label();
      if (l.empty()) fail("expected '(' or a label");
      v = tree_.add_node(l);
    }
    return v;
  }

  std::string label() {
    std::string out;
    if (peek() == '\'') {
      ++pos_;
      for (;;) {
        if (pos_ >= s_.size()) fail("unterminated quoted label");
        char c = s_[pos_++];
        if (c == '\'') {
          if (peek() == '\'') {
            out += '\'';
            ++pos_;
            continue;
          }
          break;
        }
        out += c;
      }
      return out;
    }
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' ||
          c == ':' || c == ';')
        break;
      out += c;
      ++pos_;
    }
    return out;
  }

  double number() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '-' || s_[pos_] == '+' ||
                                s_[pos_] == 'e' || s_[pos_] == 'E'))
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    char* end = nullptr;
    double w = tok.empty() ? 0.0 : std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) {
      pos_ = start;
      fail("malformed edge length");
    }
    return w;
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InvalidInput("newick: " + msg + " at offset " + std::to_string(pos_));
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  WeightedTree tree_;
};

}  // namespace

std::string to_newick(const WeightedTree& tree) {
  if (tree.num_nodes() == 0) throw InvalidInput("to_newick: empty tree");
  // Root at an unlabeled degree-2 node when one exists (a rooted shape),
  // otherwise at the first internal node.
  NodeId root = kNoNode;
  for (NodeId v = 0; v < tree.num_nodes() && root == kNoNode; ++v)
    if (tree.degree(v) == 2 && tree.label(v).empty()) root = v;
  for (NodeId v = 0; v < tree.num_nodes() && root == kNoNode; ++v)
    if (tree.degree(v) >= 2) root = v;
  if (root == kNoNode) root = 0;
  std::string out;
  write_subtree(tree, root, kNoNode, out);
  return out + ";";
}

WeightedTree parse_newick(std::string_view text) { return Parser(text).parse(); }

}  // namespace tsg
