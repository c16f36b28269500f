#include "tree.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>

namespace xtt {

namespace {

std::atomic<NodeId> g_next_node_id{1};

NodeId fresh_id() { return g_next_node_id.fetch_add(1, std::memory_order_relaxed); }

}  // namespace

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_') return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

std::size_t TreeNode::sibling_index() const {
  if (!parent) return 0;
  const auto& sibs = parent->children;
  return static_cast<std::size_t>(
      std::find(sibs.begin(), sibs.end(), this) - sibs.begin());
}

const TreeNode* TreeNode::next_sibling() const {
  if (!parent) return nullptr;
  std::size_t i = sibling_index();
  return i + 1 < parent->children.size() ? parent->children[i + 1] : nullptr;
}

const TreeNode* TreeNode::prev_sibling() const {
  if (!parent) return nullptr;
  std::size_t i = sibling_index();
  return i > 0 ? parent->children[i - 1] : nullptr;
}

const TreeNode* TreeNode::root() const {
  const TreeNode* n = this;
  while (n->parent) n = n->parent;
  return n;
}

void DataTree::reindex() {
  order_.clear();
  order_.reserve(arena_.size());
  if (!root_) return;
  std::vector<TreeNode*> stack{root_};
  while (!stack.empty()) {
    TreeNode* n = stack.back();
    stack.pop_back();
    n->preorder = static_cast<std::uint32_t>(order_.size());
    order_.push_back(n);
    for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
      stack.push_back(*it);
  }
}

const TreeNode* DataTree::node_at(std::uint32_t preorder_index) const {
  if (preorder_index >= order_.size())
    throw std::out_of_range("node index out of range");
  return order_[preorder_index];
}

bool DataTree::contains(const TreeNode* n) const {
  return n && n->root() == root_;
}

TreeBuilder::TreeBuilder() : tree_(std::make_unique<DataTree>()) {}

TreeNode* TreeBuilder::add_node(Label label, TreeNode* parent) {
  auto node = std::make_unique<TreeNode>();
  node->id = fresh_id();
  node->label = std::move(label);
  node->parent = parent;
  TreeNode* raw = node.get();
  tree_->arena_.push_back(std::move(node));
  if (parent) {
    parent->children.push_back(raw);
  } else {
    if (tree_->root_) throw std::logic_error("tree already has a root");
    tree_->root_ = raw;
  }
  return raw;
}

Tree TreeBuilder::finish() {
  if (!tree_->root_) throw std::logic_error("empty tree");
  tree_->reindex();
  return std::move(tree_);
}

namespace {

void encode_node(const TreeNode* n, std::string& out) {
  out += n->label;
  out += '{';
  for (const TreeNode* c : n->children) encode_node(c, out);
  out += '}';
}

}  // namespace

std::string tree_to_string(const DataTree& t) {
  std::string out;
  encode_node(t.root(), out);
  return out;
}

std::string forest_to_string(const Forest& f) {
  std::string out;
  for (const auto& t : f) out += tree_to_string(*t);
  return out;
}

namespace {

struct TreeLexer {
  std::string_view text;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }
  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }
  Label label() {
    skip_ws();
    std::size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    Label l(text.substr(start, pos - start));
    if (!is_identifier(l))
      throw ParseError("expected a label at offset " + std::to_string(start), start);
    return l;
  }
  void expect(char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c)
      throw ParseError(std::string("expected '") + c + "', unbalanced at offset " +
                           std::to_string(pos),
                       pos);
    ++pos;
  }
};

TreeNode* parse_node(TreeLexer& lx, TreeBuilder& b, TreeNode* parent) {
  Label l = lx.label();
  TreeNode* n = b.add_node(std::move(l), parent);
  lx.expect('{');
  while (lx.peek() != '}') {
    if (lx.at_end())
      throw ParseError("unbalanced at offset " + std::to_string(lx.pos), lx.pos);
    parse_node(lx, b, n);
  }
  lx.expect('}');
  return n;
}

}  // namespace

Tree parse_tree(std::string_view text) {
  TreeLexer lx{text};
  if (lx.at_end()) throw ParseError("empty input", 0);
  TreeBuilder b;
  parse_node(lx, b, nullptr);
  if (!lx.at_end())
    throw ParseError("trailing input at offset " + std::to_string(lx.pos), lx.pos);
  return b.finish();
}

Forest parse_forest(std::string_view text) {
  TreeLexer lx{text};
  Forest f;
  while (!lx.at_end()) {
    TreeBuilder b;
    parse_node(lx, b, nullptr);
    f.push_back(b.finish());
  }
  return f;
}

Tree maketree(Forest forest) {
  auto doc = std::make_unique<TreeNode>();
  doc->id = fresh_id();
  doc->label = "doc";
  auto tree = std::make_unique<DataTree>();
  tree->root_ = doc.get();
  tree->arena_.push_back(std::move(doc));
  for (auto& sub : forest) {
    sub->root_->parent = tree->root_;
    tree->root_->children.push_back(sub->root_);
    for (auto& n : sub->arena_) tree->arena_.push_back(std::move(n));
  }
  tree->reindex();
  return tree;
}

Forest chop_root(Tree tree) {
  Forest out;
  if (!tree->root_) return out;
  // Partition the arena by top-level subtree; node objects stay put, so node
  // identities survive the split.
  std::vector<TreeNode*> tops(tree->root_->children.begin(),
                              tree->root_->children.end());
  for (TreeNode* top : tops) {
    auto sub = std::make_unique<DataTree>();
    top->parent = nullptr;
    sub->root_ = top;
    out.push_back(std::move(sub));
  }
  // Route each arena entry to the tree that owns it.
  for (auto& owned : tree->arena_) {
    if (owned.get() == tree->root_) continue;  // the chopped root is dropped
    const TreeNode* r = owned->root();
    for (std::size_t i = 0; i < tops.size(); ++i) {
      if (r == tops[i]) {
        out[i]->arena_.push_back(std::move(owned));
        break;
      }
    }
  }
  for (auto& sub : out) sub->reindex();
  return out;
}

namespace {

TreeNode* copy_rec(const TreeNode* src, TreeBuilder& b, TreeNode* parent) {
  TreeNode* n = b.add_node(src->label, parent);
  for (const TreeNode* c : src->children) copy_rec(c, b, n);
  return n;
}

}  // namespace

Tree subtree_copy(const DataTree& t, const TreeNode* n) {
  if (!t.contains(n)) throw std::invalid_argument("node does not occur in tree");
  TreeBuilder b;
  copy_rec(n, b, nullptr);
  return b.finish();
}

Tree clone_tree(const DataTree& t) {
  TreeBuilder b;
  copy_rec(t.root(), b, nullptr);
  return b.finish();
}

Tree flattree(std::span<const Label> labels) {
  TreeBuilder b;
  TreeNode* doc = b.add_node("doc", nullptr);
  for (const Label& l : labels) b.add_node(l, doc);
  return b.finish();
}

namespace {

void tokens_rec(const TreeNode* n, std::vector<Label>& out) {
  out.push_back(n->label);
  out.push_back("lbrace");
  for (const TreeNode* c : n->children) tokens_rec(c, out);
  out.push_back("rbrace");
}

}  // namespace

std::vector<Label> encoding_tokens(const DataTree& t) {
  std::vector<Label> out;
  tokens_rec(t.root(), out);
  return out;
}

bool is_isomorphic(const DataTree& a, const DataTree& b) {
  return tree_to_string(a) == tree_to_string(b);
}

std::size_t subtree_size(const TreeNode* n) {
  std::size_t total = 1;
  for (const TreeNode* c : n->children) total += subtree_size(c);
  return total;
}

}  // namespace xtt
