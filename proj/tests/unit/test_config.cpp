#include <gtest/gtest.h>

#include "pamlab/config.hpp"
#include "pamlab/error.hpp"

using namespace pamlab;

TEST(Config, ParseSectionsAndComments) {
  const auto c = ConfigMap::parse("seed = 7\n# comment\n[covariance]\nkind = riesz  # trailing\neta=0.5\n");
  EXPECT_EQ(c.get_int("seed"), 7);
  EXPECT_EQ(c.get_string("covariance.kind"), "riesz");
  EXPECT_DOUBLE_EQ(c.get_double("covariance.eta"), 0.5);
}

TEST(Config, HashIgnoresOrderAndWhitespace) {
  const auto a = ConfigMap::parse("a = 1\nb = 0.50\nlist = 1, 2,3\n");
  const auto b = ConfigMap::parse("list=1.0,2,  3\n  b=0.5\na   =  1.000\n");
  EXPECT_EQ(a.canonical_text(), b.canonical_text());
  EXPECT_EQ(a.hash(), b.hash());
  const auto c = ConfigMap::parse("a = 2\nb = 0.5\nlist = 1,2,3\n");
  EXPECT_NE(a.hash(), c.hash());
}

TEST(Config, Errors) {
  EXPECT_THROW(ConfigMap::parse("novalue\n"), Error);
  const auto c = ConfigMap::parse("x = abc\n");
  EXPECT_THROW(c.get_double("x"), Error);
  EXPECT_THROW(c.get_string("missing"), Error);
}

TEST(Config, Fnv1aReference) {
  // Published FNV-1a 64 test values.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ull);
}

TEST(Config, Subtree) {
  const auto c = ConfigMap::parse("grid.n = 64\ngrid.dx = 0.1\nt = 1\n");
  const auto g = c.subtree("grid");
  EXPECT_EQ(g.entries().size(), 2u);
  EXPECT_EQ(g.get_int("n"), 64);
}
