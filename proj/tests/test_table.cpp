#include "catch_amalgamated.hpp"

#include <rfrisk/table.hpp>

#include <cmath>
#include <limits>
#include <sstream>

using namespace rfrisk;

TEST_CASE("number formatting", "[table]") {
    CHECK(format_number(0.1) == "0.10000000000000001");
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
    double v;
    CHECK(parse_number("1e-300", v));
    CHECK(v == 1e-300);
    CHECK_FALSE(parse_number("1.5x", v));
    CHECK_FALSE(parse_number("", v));
}

TEST_CASE("csv round trip", "[table]") {
    Table t;
    t.columns = {"name", "value", "note"};
    t.add_row({std::string("relu"), 0.5, std::string("plain")});
    t.add_row({std::string("a,b"), std::numeric_limits<double>::infinity(), std::string("say \"hi\"")});
    t.add_row({std::string("3.5"), std::nan(""), std::string("")});
    t.add_row({std::string("nan"), -std::numeric_limits<double>::infinity(), std::string("two\nlines")});
    t.add_row({std::string("x"), 1.0 / 3.0, std::string("inf")});

    std::stringstream ss;
    write_csv(ss, t);
    const Table back = read_csv(ss);
    REQUIRE(back.columns == t.columns);
    REQUIRE(back.rows.size() == t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t c = 0; c < t.columns.size(); ++c) CHECK(same_field(back.rows[r][c], t.rows[r][c]));
    CHECK(back.number(4, "value") == 1.0 / 3.0);
    CHECK_THROWS_AS(back.number(0, "name"), Error);
    CHECK_THROWS_AS(back.column_index("missing"), Error);
}

TEST_CASE("csv text layout", "[table]") {
    Table t;
    t.columns = {"a", "b"};
    t.add_row({std::string("1"), 2.0});
    std::ostringstream os;
    write_csv(os, t);
    CHECK(os.str() == "a,b\n\"1\",2\n");
    CHECK_THROWS_AS(t.add_row({1.0}), Error);
}
