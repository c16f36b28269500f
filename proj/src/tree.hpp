#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace xtt {

// Labels are identifiers over the program alphabet. `doc` is reserved for
// forest wrapping, `lbrace`/`rbrace`/`blank` are reserved by the generators.
using Label = std::string;
using NodeId = std::uint64_t;

bool is_identifier(std::string_view s);

class DataTree;

// One node of an ordered labeled tree. Nodes are owned by their tree's arena
// and never move in memory; identity is the pointer (NodeId mirrors it for
// diagnostics and uniqueness checks).
struct TreeNode {
  NodeId id = 0;
  Label label;
  TreeNode* parent = nullptr;
  std::vector<TreeNode*> children;
  std::uint32_t preorder = 0;  // index within the owning tree, root = 0

  bool is_leaf() const { return children.empty(); }
  // Index of this node in parent->children; 0 for a root.
  std::size_t sibling_index() const;
  const TreeNode* next_sibling() const;
  const TreeNode* prev_sibling() const;
  const TreeNode* root() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : std::runtime_error(msg), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// An ordered labeled tree with a single root. Mutation happens only while
// building (parse, clone, graft); afterwards trees are shared as
// shared_ptr<const DataTree> and treated as immutable.
class DataTree {
 public:
  DataTree() = default;
  DataTree(const DataTree&) = delete;
  DataTree& operator=(const DataTree&) = delete;
  DataTree(DataTree&&) = default;
  DataTree& operator=(DataTree&&) = default;

  const TreeNode* root() const { return root_; }
  std::size_t node_count() const { return arena_.size(); }
  // Nodes in preorder; stable for the life of the tree.
  std::span<const TreeNode* const> preorder() const { return order_; }
  const TreeNode* node_at(std::uint32_t preorder_index) const;
  bool contains(const TreeNode* n) const;

 private:
  friend class TreeBuilder;
  friend std::unique_ptr<DataTree> maketree(
      std::vector<std::unique_ptr<DataTree>> forest);
  friend std::vector<std::unique_ptr<DataTree>> chop_root(
      std::unique_ptr<DataTree> tree);

  void reindex();

  std::vector<std::unique_ptr<TreeNode>> arena_;
  std::vector<const TreeNode*> order_;
  TreeNode* root_ = nullptr;
};

using Tree = std::unique_ptr<DataTree>;
using TreeRef = std::shared_ptr<const DataTree>;
// An ordered sequence of node-disjoint trees.
using Forest = std::vector<Tree>;

// Incremental construction with fresh node ids.
class TreeBuilder {
 public:
  TreeBuilder();
  TreeNode* add_node(Label label, TreeNode* parent);  // parent null = root
  Tree finish();

 private:
  Tree tree_;
};

// Brace encoding: label `{` children `}`. Whitespace between tokens ignored.
std::string tree_to_string(const DataTree& t);
std::string forest_to_string(const Forest& f);
Tree parse_tree(std::string_view text);
Forest parse_forest(std::string_view text);

// Wraps the forest under a fresh root labeled `doc`, preserving the forest's
// node identities. Inverse of chop_root.
Tree maketree(Forest forest);
Forest chop_root(Tree tree);

// Fresh copy (new ids) of the subtree rooted at n; n must occur in t.
Tree subtree_copy(const DataTree& t, const TreeNode* n);
Tree clone_tree(const DataTree& t);

// Depth-1 tree: doc root whose children spell out the given label sequence.
Tree flattree(std::span<const Label> labels);

// The token sequence of tree_to_string(t): node labels plus the reserved
// labels lbrace/rbrace for the braces.
std::vector<Label> encoding_tokens(const DataTree& t);

// Ordered labeled tree isomorphism: structural equality ignoring node ids.
bool is_isomorphic(const DataTree& a, const DataTree& b);

std::size_t subtree_size(const TreeNode* n);

}  // namespace xtt
