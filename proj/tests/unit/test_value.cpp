#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sheetagent/address.hpp"
#include "sheetagent/criteria.hpp"
#include "sheetagent/value.hpp"
#include "test_support.hpp"

using namespace sheetagent;

TEST(Date, LeapYearRules) {
    EXPECT_TRUE(is_valid_date(2024, 2, 29));
    EXPECT_FALSE(is_valid_date(2023, 2, 29));
    EXPECT_TRUE(is_valid_date(2000, 2, 29));
    EXPECT_FALSE(is_valid_date(1900, 2, 29));
    EXPECT_FALSE(is_valid_date(2023, 4, 31));
    EXPECT_FALSE(is_valid_date(2023, 13, 1));
    EXPECT_FALSE(is_valid_date(2023, 0, 1));
}

TEST(Date, IsoParseIsStrict) {
    auto d = Date::parse_iso("2023-04-07");
    ASSERT_TRUE(d);
    EXPECT_EQ(d->iso(), "2023-04-07");
    EXPECT_FALSE(Date::parse_iso("2023-4-07"));
    EXPECT_FALSE(Date::parse_iso("2023-04-07 "));
    EXPECT_FALSE(Date::parse_iso("2023-02-30"));
    EXPECT_FALSE(Date::parse_iso("04/07/2023"));
}

TEST(Value, DisplayForms) {
    EXPECT_EQ(Value::number(1110).display(), "1110");
    EXPECT_EQ(Value::number(0.1 + 0.2).display(), format_number(0.1 + 0.2));
    EXPECT_EQ(Value::boolean(true).display(), "TRUE");
    EXPECT_EQ(Value::error(ErrorKind::Div0).display(), "#DIV/0!");
    EXPECT_EQ(Value::error(ErrorKind::Cycle).display(), "#CYCLE!");
    EXPECT_EQ(Value::empty().display(), "");
    EXPECT_EQ(Value::date(*Date::make(2023, 4, 30)).display(), "2023-04-30");
}

TEST(Number, FormatRoundTripsRandomDoubles) {
    testsupport::Rng rng(11);
    std::uniform_real_distribution<double> dist(-1e9, 1e9);
    for (int i = 0; i < 2000; ++i) {
        double x = dist(rng.engine());
        if (i % 3 == 0) x = std::round(x);
        if (i % 5 == 0) x /= 1e7;
        const std::string s = format_number(x);
        auto back = parse_number(s);
        ASSERT_TRUE(back) << s;
        EXPECT_EQ(*back, x) << s;
    }
    EXPECT_EQ(format_number(89.99), "89.99");
    EXPECT_EQ(format_number(-0.0), "0");
}

TEST(Number, ParseRejectsJunk) {
    EXPECT_FALSE(parse_number(""));
    EXPECT_FALSE(parse_number(" 1"));
    EXPECT_FALSE(parse_number("1x"));
    EXPECT_FALSE(parse_number("abc"));
    EXPECT_EQ(*parse_number("-12.5"), -12.5);
}

TEST(Address, ColumnLettersRoundTrip) {
    for (int c = 1; c <= kMaxColumn; ++c) ASSERT_EQ(column_index(column_letters(c)), c);
    EXPECT_EQ(column_letters(1), "A");
    EXPECT_EQ(column_letters(27), "AA");
    EXPECT_EQ(column_letters(kMaxColumn), "XFD");
    EXPECT_FALSE(column_index("XFE"));
    EXPECT_FALSE(column_index(""));
    EXPECT_FALSE(column_index("A1"));
}

TEST(Address, ParseQualifiedAndAbsolute) {
    auto a = CellAddress::parse("$B$7");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->column, 2);
    EXPECT_EQ(a->row, 7);
    auto q = CellAddress::parse("'My Sheet'!C3");
    ASSERT_TRUE(q);
    EXPECT_EQ(q->sheet, "My Sheet");
    EXPECT_EQ(q->to_string(), "'My Sheet'!C3");
    EXPECT_EQ(CellAddress::parse("Sheet1!A1")->to_string(), "Sheet1!A1");
    EXPECT_FALSE(CellAddress::parse("A0"));
    EXPECT_FALSE(CellAddress::parse("1A"));
    EXPECT_FALSE(CellAddress::parse("A1048577"));
}

TEST(Rect, IntersectionIsSymmetric) {
    testsupport::Rng rng(5);
    for (int i = 0; i < 1000; ++i) {
        Rect a{rng.range(1, 10), rng.range(1, 10), 0, 0}, b{rng.range(1, 10), rng.range(1, 10), 0, 0};
        a.right = a.left + rng.range(0, 4);
        a.bottom = a.top + rng.range(0, 4);
        b.right = b.left + rng.range(0, 4);
        b.bottom = b.top + rng.range(0, 4);
        bool shared = false;
        for (int c = a.left; c <= a.right; ++c)
            for (int r = a.top; r <= a.bottom; ++r) shared = shared || b.contains(c, r);
        ASSERT_EQ(a.intersects(b), shared);
        ASSERT_EQ(b.intersects(a), shared);
    }
}

TEST(Criteria, ParsesOperatorsAndCoercesOperands) {
    auto c = Criteria::parse(">=2023-04-01");
    EXPECT_EQ(c.op, CriteriaOp::Ge);
    EXPECT_TRUE(c.operand.is_date());
    EXPECT_TRUE(c.matches(Value::date(*Date::make(2023, 4, 1))));
    EXPECT_FALSE(c.matches(Value::date(*Date::make(2023, 3, 31))));

    auto n = Criteria::parse("<>0");
    EXPECT_EQ(n.op, CriteriaOp::Ne);
    EXPECT_TRUE(n.matches(Value::number(3)));
    EXPECT_FALSE(n.matches(Value::number(0)));

    auto t = Criteria::parse("operational");
    EXPECT_EQ(t.op, CriteriaOp::Eq);
    EXPECT_TRUE(t.matches(Value::text("Operational")));
    EXPECT_FALSE(t.matches(Value::text("Supplies")));
    EXPECT_FALSE(Criteria::parse(">5").matches(Value::text("abc")));
}

TEST(Criteria, ToStringRoundTrips) {
    testsupport::Rng rng(7);
    const std::vector<std::string> ops{"", "=", "<>", "<", "<=", ">", ">="};
    const std::vector<std::string> operands{"5", "-2.5", "2023-04-01", "TRUE", "Travel", "a b", "=x", ">y", ""};
    for (int i = 0; i < 500; ++i) {
        const Criteria c = Criteria::parse(rng.pick(ops) + rng.pick(operands));
        EXPECT_EQ(Criteria::parse(c.to_string()), c) << c.to_string();
    }
}
