#include "tubelab/tube_tree.hpp"

#include <algorithm>

#include "tubelab/error.hpp"
#include "tubelab/linking.hpp"

namespace tubelab {

namespace {

real max_offset(const Polyline& loop, const Polyline& core) {
  real m = 0;
  for (const Vec3& v : loop.vertices())
    m = std::max(m, dist_to_polyline(v, core));
  return m;
}

NestingCertificate certify_pair(const Tube& parent, const BingChildren& kids,
                                const Tube& t1, const Tube& t2) {
  NestingCertificate cert;
  cert.parent = parent.label;
  cert.hooks_first =
      surface_crossings(kids.second.loop, kids.first.caps).unsigned_total;
  cert.hooks_second =
      surface_crossings(kids.first.loop, kids.second.caps).unsigned_total;
  cert.unlinked = linking_number(kids.first.loop, kids.second.loop) == 0;
  cert.nested =
      tube_contains_tube(parent, t1) && tube_contains_tube(parent, t2);
  cert.disjoint =
      dist_polylines(kids.first.loop, kids.second.loop) > t1.radius + t2.radius;
  cert.balanced = true;
  bool seen_first = false, seen_second = false;
  for (const Disk& probe : plan_disks(parent, parent.core.length() / 6)) {
    const MeridianHits h1 = meridian_intersections(kids.first.loop, probe);
    const MeridianHits h2 = meridian_intersections(kids.second.loop, probe);
    if (h1.signed_total != 0 || h2.signed_total != 0 ||
        h1.unsigned_total % 2 != 0 || h2.unsigned_total % 2 != 0)
      cert.balanced = false;
    seen_first = seen_first || h1.unsigned_total >= 2;
    seen_second = seen_second || h2.unsigned_total >= 2;
  }
  cert.balanced = cert.balanced && seen_first && seen_second;
  return cert;
}

}  // namespace

const Tube& TubeTree::at(const Word& w) const {
  std::size_t i = 0;
  for (const char ch : w) {
    if (ch != '1' && ch != '2')
      throw Error(errc::config_invalid, "tree address letters must be 1 or 2");
    i = 2 * i + (ch == '1' ? 1 : 2);
    if (i >= nodes.size())
      throw Error(errc::config_invalid, "address deeper than the tree");
  }
  return nodes[i];
}

real quarter_rule_radius(const Tube& parent, const Polyline& a,
                         const Polyline& b) {
  const real sibling = dist_polylines(a, b);
  const real wall = parent.radius - std::max(max_offset(a, parent.core),
                                             max_offset(b, parent.core));
  return 0.25L * std::min(sibling, wall);
}

TubeTree build_tube_tree(const Tube& root, int depth, PairStyle style,
                         bool certify) {
  if (depth < 0) throw Error(errc::config_invalid, "negative tree depth");
  if (depth > 20)
    throw Error(errc::size_exceeded, "full tree would exceed memory");

  TubeTree tree;
  tree.depth = depth;
  tree.style = style;
  tree.nodes.resize((std::size_t{2} << depth) - 1);
  tree.nodes[0] = root;

  const std::size_t internal = (std::size_t{1} << depth) - 1;
  if (certify) tree.certificates.reserve(internal);
  for (std::size_t i = 0; i < internal; ++i) {
    const Tube& parent = tree.nodes[i];
    std::optional<BingSchedule> sched;
    if (style != PairStyle::kClasped) {
      BingSchedule s;
      s.disks = plan_disks(parent, parent.core.length() / 2);
      s.first_window = {0, 1, 2};
      s.second_window = {2, 3, 0};
      s.style = style;
      sched = std::move(s);
    }
    const BingChildren kids = bing_children(parent, sched);
    const real r =
        quarter_rule_radius(parent, kids.first.loop, kids.second.loop);
    const auto [w1, w2] = word_children(parent.label);
    tree.nodes[2 * i + 1] = tube_of(kids.first.loop, r, w1);
    tree.nodes[2 * i + 2] = tube_of(kids.second.loop, r, w2);
    if (certify)
      tree.certificates.push_back(certify_pair(
          parent, kids, tree.nodes[2 * i + 1], tree.nodes[2 * i + 2]));
  }
  return tree;
}

}  // namespace tubelab
