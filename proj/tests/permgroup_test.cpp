#include <gtest/gtest.h>

#include <random>

#include "support.hpp"
#include "wreath/perm_group.hpp"

using namespace wreath;

namespace {

PermGroup chain_of(const std::vector<Permutation>& gens, std::size_t degree) {
  return build(gens, degree);
}

PermGroup tree_of(const std::vector<Permutation>& gens, std::size_t d, std::size_t n) {
  return build(gens, checked_power(d, n, SIZE_MAX / 2), TreeLayout{d, n});
}

}  // namespace

TEST(PermGroup, SymmetricAndAlternating) {
  const std::size_t n = 7;
  Permutation t = Permutation::parse_cycles("(1 2)", n);
  Permutation c = Permutation::parse_cycles("(1 2 3 4 5 6 7)", n);
  EXPECT_EQ(order(chain_of({t, c}, n)), 5040);
  Permutation c3 = Permutation::parse_cycles("(1 2 3)", n);
  Permutation c5 = Permutation::parse_cycles("(3 4 5 6 7)", n);
  PermGroup a7 = chain_of({c3, c5}, n);
  EXPECT_EQ(order(a7), 2520);
  EXPECT_FALSE(a7.contains(t));
  EXPECT_TRUE(a7.contains(c));
  EXPECT_EQ(index(chain_of({t, c}, n), a7), 2);
  EXPECT_TRUE(same_group(derived_subgroup(chain_of({t, c}, n), chain_of({t, c}, n)), a7));
}

TEST(PermGroup, TrivialGroup) {
  PermGroup g = build({}, 5);
  EXPECT_EQ(order(g), 1);
  EXPECT_TRUE(g.is_trivial());
  EXPECT_TRUE(g.contains(Permutation::identity(5)));
  EXPECT_THROW(g.contains(Permutation::identity(4)), DegreeMismatch);
}

TEST(PermGroup, TreeLayoutRequiresPrimeDegreeAndFit) {
  auto s = wt::session("ggs3");
  auto gens = wt::truncated_generators(*s, 3);
  EXPECT_TRUE(tree_of(gens, 3, 3).is_tree());
  EXPECT_FALSE(chain_of(gens, 27).is_tree());
  // A non-automorphism of the tree falls back to the chain.
  gens.push_back(Permutation::parse_cycles("(1 2)", 27));
  EXPECT_FALSE(tree_of(gens, 3, 3).is_tree());
  // Degree 4 is not prime.
  EXPECT_FALSE(build({Permutation::parse_cycles("(1 2 3 4)", 4)}, 4, TreeLayout{4, 1}).is_tree());
}

TEST(PermGroup, NormalClosureAndSeries) {
  // D8 acting on a square: the rotation's square generates the centre = derived subgroup.
  const std::size_t n = 4;
  Permutation r = Permutation::parse_cycles("(1 2 3 4)", n);
  Permutation f = Permutation::parse_cycles("(2 4)", n);
  PermGroup d8 = chain_of({r, f}, n);
  EXPECT_EQ(order(d8), 8);
  PermGroup z = derived_subgroup(d8, d8);
  EXPECT_EQ(order(z), 2);
  EXPECT_TRUE(z.contains(r * r));
  auto lcs = lower_central_series(d8, 4);
  EXPECT_EQ(order(lcs[0]), 8);
  EXPECT_EQ(order(lcs[1]), 2);
  EXPECT_EQ(order(lcs[2]), 1);
  EXPECT_EQ(order(lcs[3]), 1);
  EXPECT_EQ(order(normal_closure(d8, {f})), 4);
  EXPECT_THROW(normal_closure(d8, {Permutation::parse_cycles("(1 2)", n)}), NotASubgroup);
}

TEST(PermGroup, PointwiseStabilizerAgreesAcrossBackends) {
  auto s = wt::session("basilica");
  for (std::size_t n = 2; n <= 5; ++n) {
    auto gens = wt::truncated_generators(*s, n);
    PermGroup t = tree_of(gens, 2, n);
    PermGroup c = chain_of(gens, t.degree());
    ASSERT_TRUE(t.is_tree());
    EXPECT_EQ(order(t), order(c));
    std::vector<Point> pts{0, static_cast<Point>(t.degree() - 1)};
    PermGroup st = pointwise_stabilizer(t, pts);
    PermGroup sc = pointwise_stabilizer(c, pts);
    EXPECT_EQ(order(st), order(sc)) << "level " << n;
    for (const Permutation& g : st.generators()) {
      EXPECT_TRUE(sc.contains(g));
    }
  }
}

TEST(PermGroup, LevelStabilizerMatchesKernelOracle) {
  auto s = wt::session("ggs3");
  auto gens = wt::truncated_generators(*s, 3);
  PermGroup q = tree_of(gens, 3, 3);
  wt::PermSet all = wt::closure(gens, 27);
  for (std::size_t l = 0; l <= 3; ++l) {
    PermGroup k = level_stabilizer(q, l);
    wt::PermSet oracle = wt::level_kernel(all, 3, 3, l);
    EXPECT_EQ(order(k), BigCount(oracle.size())) << "level " << l;
    for (const Permutation& g : k.generators()) {
      EXPECT_TRUE(oracle.count(g));
    }
  }
}

TEST(PermGroup, SerializationRoundTrip) {
  auto s = wt::session("basilica");
  for (bool tree : {true, false}) {
    auto gens = wt::truncated_generators(*s, 6);
    PermGroup g = tree ? tree_of(gens, 2, 6) : chain_of(gens, 64);
    std::string text = serialize(g);
    PermGroup back = deserialize_group(text);
    EXPECT_EQ(back.is_tree(), tree);
    EXPECT_EQ(back.base_description(), g.base_description());
    EXPECT_EQ(back.strong_generators(), g.strong_generators());
    EXPECT_EQ(order(back), order(g));
    EXPECT_EQ(serialize(back), text);
  }
  EXPECT_THROW(deserialize_group("wreath-bsgs v9\n"), Error);
}

TEST(PermGroup, EnumerationOverflow) {
  auto s = wt::session("basilica");
  PermGroup g = tree_of(wt::truncated_generators(*s, 4), 2, 4);
  EXPECT_TRUE(enumerate(g, 100).overflow);
  Enumeration e = enumerate(g, 10000);
  EXPECT_FALSE(e.overflow);
  EXPECT_EQ(BigCount(e.elements.size()), order(g));
}

// Order and membership against breadth-first enumeration.

struct OracleCase {
  const char* group;
  std::size_t level;
};

class OracleEquivalence : public ::testing::TestWithParam<OracleCase> {};

TEST_P(OracleEquivalence, OrderAndRandomSifts) {
  const auto [name, n] = GetParam();
  auto s = wt::session(name);
  auto gens = wt::truncated_generators(*s, n);
  const std::size_t points = s->points(n);
  wt::PermSet oracle = wt::closure(gens, points);
  PermGroup t = tree_of(gens, s->degree(), n);
  PermGroup c = chain_of(gens, points);
  ASSERT_TRUE(t.is_tree());
  EXPECT_EQ(order(t), BigCount(oracle.size()));
  EXPECT_EQ(order(c), BigCount(oracle.size()));

  std::mt19937_64 rng(n * 31 + s->degree());
  std::vector<Permutation> members = wt::elements(oracle);
  int in = 0;
  for (int i = 0; i < 1000; ++i) {
    // Half the probes are group elements, half are random tree automorphisms.
    Permutation x = i % 2 == 0 ? members[rng() % members.size()]
                               : truncate(wt::random_automaton(s->degree(), 3, rng), n);
    const bool expected = oracle.count(x) > 0;
    in += expected;
    ASSERT_EQ(t.contains(x), expected) << x.cycles();
    ASSERT_EQ(c.contains(x), expected) << x.cycles();
  }
  EXPECT_GE(in, 500);
}

INSTANTIATE_TEST_SUITE_P(Groups, OracleEquivalence,
                         ::testing::Values(OracleCase{"basilica", 2}, OracleCase{"basilica", 3},
                                           OracleCase{"basilica", 4}, OracleCase{"ggs3", 1},
                                           OracleCase{"ggs3", 2}, OracleCase{"ggs3", 3},
                                           OracleCase{"ggs5", 1}, OracleCase{"ggs5", 2}),
                         [](const auto& info) {
                           return std::string(info.param.group) + "_L" + std::to_string(info.param.level);
                         });

TEST(PermGroup, TreeAndChainAgreeOnDeepQuotients) {
  for (auto [name, n] : {std::pair{"basilica", 7}, std::pair{"ggs3", 4}, std::pair{"ggs5", 3}}) {
    auto s = wt::session(name);
    auto gens = wt::truncated_generators(*s, n);
    PermGroup t = tree_of(gens, s->degree(), n);
    PermGroup c = chain_of(gens, t.degree());
    EXPECT_EQ(order(t), order(c)) << name;
    PermGroup dt = derived_subgroup(t, t);
    PermGroup dc = derived_subgroup(c, c);
    EXPECT_EQ(order(dt), order(dc)) << name;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
      Permutation x = truncate(wt::random_word(*s, rng, 12), n);
      Permutation y = truncate(wt::random_automaton(s->degree(), 2, rng), n);
      EXPECT_EQ(dt.contains(x), dc.contains(x));
      EXPECT_EQ(dt.contains(y), dc.contains(y));
      EXPECT_EQ(t.contains(y), c.contains(y));
    }
  }
}

TEST(PermGroup, StructuralInvariantsOnShippedQuotients) {
  for (auto [name, n] : {std::pair{"basilica", 6}, std::pair{"ggs3", 3}}) {
    auto s = wt::session(name);
    const PermGroup& q = s->level_quotient(n)->quotient;
    // Transversal lengths multiply to the order; generators sift.
    BigCount prod = 1;
    for (std::size_t t : q.transversal_sizes()) {
      prod *= t;
    }
    EXPECT_EQ(prod, order(q)) << name;
    for (const Permutation& g : q.generators()) {
      EXPECT_TRUE(q.contains(g));
    }
    // Normal closures are normal.
    PermGroup nc = normal_closure(q, {q.generators()[0]});
    for (const Permutation& g : nc.generators()) {
      for (const Permutation& x : q.generators()) {
        EXPECT_TRUE(nc.contains(g.conjugate_by(x)));
      }
    }
    // The lower central series descends and index * order is exact.
    auto lcs = lower_central_series(q, 5);
    for (std::size_t i = 1; i < lcs.size(); ++i) {
      EXPECT_TRUE(is_subgroup(lcs[i], lcs[i - 1]));
      EXPECT_EQ(index(lcs[i - 1], lcs[i]) * order(lcs[i]), order(lcs[i - 1]));
    }
  }
}
