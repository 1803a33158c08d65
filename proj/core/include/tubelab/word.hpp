#pragma once

#include <string>
#include <utility>
#include <vector>

namespace tubelab {

// Address of a node in the infinite rooted binary tree: a string over the
// alphabet {'1','2'}.  The empty word is the root; depth equals length.
using Word = std::string;

inline constexpr int kDefaultMaxDepth = 12;

bool is_valid_word(const Word& w);

inline int word_depth(const Word& w) { return static_cast<int>(w.size()); }

// The two children in order: w1, w2.
std::pair<Word, Word> word_children(const Word& w);

// Parent of a non-root word; throws on the root.
Word word_parent(const Word& w);

bool is_ancestor(const Word& a, const Word& b);

// All words of depth k in lexicographic order.  Guarded by max_depth because
// the level size is 2^k; throws depth-overflow above the cap.
std::vector<Word> word_level(int k, int max_depth = kDefaultMaxDepth);

// Perfect shuffle of two addresses: alternate letters starting with u, then
// append the tail of the longer argument.  Restricted to equal depths it is
// injective, which is what pairing two tube trees needs.
Word interlace(const Word& u, const Word& v);

// Balanced inverse of interlace: even-position letters, odd-position letters.
// interlace(de_interlace(w)) == w for every word w.
std::pair<Word, Word> de_interlace(const Word& w);

}  // namespace tubelab
