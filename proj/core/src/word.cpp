#include "tubelab/word.hpp"

#include <string>

#include "tubelab/error.hpp"

namespace tubelab {

bool is_valid_word(const Word& w) {
  for (char c : w) {
    if (c != '1' && c != '2') return false;
  }
  return true;
}

std::pair<Word, Word> word_children(const Word& w) {
  return {w + '1', w + '2'};
}

Word word_parent(const Word& w) {
  if (w.empty()) throw Error(errc::depth_overflow, "root has no parent");
  return w.substr(0, w.size() - 1);
}

bool is_ancestor(const Word& a, const Word& b) {
  return a.size() <= b.size() && b.compare(0, a.size(), a) == 0;
}

std::vector<Word> word_level(int k, int max_depth) {
  if (k < 0 || k > max_depth) {
    throw Error(errc::depth_overflow,
                "level " + std::to_string(k) + " exceeds depth cap " +
                    std::to_string(max_depth));
  }
  std::vector<Word> out;
  out.reserve(std::size_t(1) << k);
  Word w(std::size_t(k), '1');
  // Counting in binary over {'1','2'} yields lexicographic order directly.
  while (true) {
    out.push_back(w);
    int i = k - 1;
    while (i >= 0 && w[std::size_t(i)] == '2') {
      w[std::size_t(i)] = '1';
      --i;
    }
    if (i < 0) break;
    w[std::size_t(i)] = '2';
  }
  return out;
}

Word interlace(const Word& u, const Word& v) {
  Word out;
  out.reserve(u.size() + v.size());
  std::size_t i = 0, j = 0;
  while (i < u.size() && j < v.size()) {
    out.push_back(u[i++]);
    out.push_back(v[j++]);
  }
  out.append(u, i, Word::npos);
  out.append(v, j, Word::npos);
  return out;
}

std::pair<Word, Word> de_interlace(const Word& w) {
  Word u, v;
  u.reserve((w.size() + 1) / 2);
  v.reserve(w.size() / 2);
  for (std::size_t i = 0; i < w.size(); ++i) {
    (i % 2 == 0 ? u : v).push_back(w[i]);
  }
  return {u, v};
}

}  // namespace tubelab
