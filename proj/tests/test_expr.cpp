#include <gtest/gtest.h>

#include <vector>

#include "lanecheck/expr.hpp"

using namespace lanecheck;

namespace {

std::vector<AttributeDef> attrs() {
  return {AttributeDef::enumeration("Road.type", AttributeGroup::Road, {"Straight", "Curved", "SteepCurved"}),
          AttributeDef::integer("Vehicle.speed", AttributeGroup::Vehicle, 10, 50, 5, "km/h"),
          AttributeDef::enumeration("Weather.type", AttributeGroup::Weather, {"Sunny", "Rainy", "Snowy"})};
}

}  // namespace

TEST(Expr, ComparisonAndImplication) {
  auto a = attrs();
  auto e = Expr::compile("Road.type == SteepCurved -> Vehicle.speed <= 20", a);
  EXPECT_TRUE(e.evaluate(std::vector<int>{2, 15, 0}));
  EXPECT_FALSE(e.evaluate(std::vector<int>{2, 25, 0}));
  EXPECT_TRUE(e.evaluate(std::vector<int>{0, 50, 0}));
  EXPECT_EQ(e.attributes(), (std::vector<std::size_t>{0, 1}));
}

TEST(Expr, PrecedenceAndKeywords) {
  auto a = attrs();
  // and binds tighter than or; -> is right associative and loosest.
  auto e = Expr::compile("Weather.type = Sunny or Weather.type = Rainy and Vehicle.speed > 40", a);
  EXPECT_TRUE(e.evaluate(std::vector<int>{0, 10, 0}));
  EXPECT_FALSE(e.evaluate(std::vector<int>{0, 10, 1}));
  EXPECT_TRUE(e.evaluate(std::vector<int>{0, 45, 1}));

  auto chain = Expr::compile("true -> false -> false", a);
  EXPECT_TRUE(chain.evaluate(std::vector<int>{0, 10, 0}));

  auto neg = Expr::compile("!(Road.type in {Curved, SteepCurved}) && not Weather.type != Sunny", a);
  EXPECT_TRUE(neg.evaluate(std::vector<int>{0, 10, 0}));
  EXPECT_FALSE(neg.evaluate(std::vector<int>{1, 10, 0}));
}

TEST(Expr, NotInAndEnumOrdering) {
  auto a = attrs();
  auto e = Expr::compile("Weather.type not in {Rainy}", a);
  EXPECT_TRUE(e.evaluate(std::vector<int>{0, 10, 2}));
  EXPECT_FALSE(e.evaluate(std::vector<int>{0, 10, 1}));
  auto ord = Expr::compile("Road.type >= Curved", a);
  EXPECT_FALSE(ord.evaluate(std::vector<int>{0, 10, 0}));
  EXPECT_TRUE(ord.evaluate(std::vector<int>{2, 10, 0}));
}

TEST(Expr, ThreeValuedEvaluation) {
  auto a = attrs();
  auto e = Expr::compile("Weather.type == Sunny -> Vehicle.speed < 30", a);
  PartialAssignment p(3);
  EXPECT_EQ(e.evaluate_partial(p), Truth::Unknown);
  p[2] = 1;
  EXPECT_EQ(e.evaluate_partial(p), Truth::True);
  p[2] = 0;
  EXPECT_EQ(e.evaluate_partial(p), Truth::Unknown);
  p[1] = 40;
  EXPECT_EQ(e.evaluate_partial(p), Truth::False);
}

TEST(Expr, Errors) {
  auto a = attrs();
  EXPECT_THROW(Expr::compile("Road.kind == Straight", a), DomainError);
  EXPECT_THROW(Expr::compile("Road.type == Wavy", a), DomainError);
  EXPECT_THROW(Expr::compile("Vehicle.speed == fast", a), DomainError);
  EXPECT_THROW(Expr::compile("Road.type ==", a), ParseError);
  EXPECT_THROW(Expr::compile("(Road.type == Curved", a), ParseError);
  EXPECT_THROW(Expr::compile("", a), ParseError);
  EXPECT_THROW(Expr::compile("Road.type == Curved $", a), ParseError);
  EXPECT_THROW(Expr::compile("Road.type in {Curved", a), ParseError);
}

TEST(Expr, NegativeIntegerLiteral) {
  std::vector<AttributeDef> a{AttributeDef::integer("Road.grade", AttributeGroup::Road, -5, 5)};
  auto e = Expr::compile("Road.grade > -3->Road.grade<4", a);
  EXPECT_TRUE(e.evaluate(std::vector<int>{-4}));
  EXPECT_FALSE(e.evaluate(std::vector<int>{4}));
}
