#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "aniso/field_io.hpp"

using namespace aniso;

TEST(FieldIo, GridFieldRoundTripIsExact)
{
    const Grid g({Axis{0.25, 0.1, 7}, Axis{-1.0 / 3.0, 0.07, 5}});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-1e3, 1e3);
    GridField f(g, 0.0);
    for (double& v : f.values)
        v = d(rng) * std::pow(10.0, static_cast<double>(rng() % 40) - 20.0);
    f.values[0] = 0.1 + 0.2;
    f.values[1] = -0.0;
    f.values[2] = 5e-324;

    std::stringstream s;
    write_field_csv(s, f, 0.5);
    const auto back = read_field_csv(s);
    EXPECT_FALSE(back.is_space_time());
    EXPECT_EQ(back.t0, 0.5);
    ASSERT_EQ(back.grid.dim(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_EQ(back.grid.axis(i).center, g.axis(i).center);
        EXPECT_EQ(back.grid.axis(i).h, g.axis(i).h);
        EXPECT_EQ(back.grid.axis(i).n, g.axis(i).n);
    }
    EXPECT_EQ(back.level().values, f.values);
}

TEST(FieldIo, SpaceTimeRoundTripIsExact)
{
    const Grid g = Grid::cube(3, 1.1, 4);
    const auto u = SpaceTimeField::sample(g, -0.3, 0.013, 6, [](std::span<const double> x, double t) {
        return std::exp(x[0] - x[1] * x[2]) * std::sin(7.0 * t);
    });
    std::stringstream s;
    write_field_csv(s, u);
    const auto back = read_field_csv(s);
    ASSERT_TRUE(back.is_space_time());
    const auto v = back.space_time();
    EXPECT_EQ(v.t0, u.t0);
    EXPECT_EQ(v.dt, u.dt);
    EXPECT_EQ(v.levels, u.levels);
    EXPECT_EQ(v.values, u.values);
    EXPECT_EQ(back.level(2).values, std::vector<double>(u.level(2).begin(), u.level(2).end()));
}

TEST(FieldIo, RowLayout)
{
    const Grid g = Grid::cube(1, 1.0, 2);
    std::stringstream s;
    write_field_csv(s, GridField(g, std::vector<double>{3.0, 4.0}), 2.0);
    std::string header, row;
    std::getline(s, header);
    std::getline(s, row);
    EXPECT_EQ(header.rfind("# N=1 axes=2 h=1 ", 0), 0u);
    EXPECT_EQ(row, "-0.5,2,3");
}

TEST(FieldIo, MalformedInput)
{
    auto read = [](const std::string& text) {
        std::istringstream in(text);
        return read_field_csv(in);
    };
    const std::string head = "# N=1 axes=2 h=1 t0=0 dt=0 levels=1 center=0\n";
    EXPECT_NO_THROW(read(head + "-0.5,0,1\n0.5,0,2\n"));
    EXPECT_THROW(read(""), ValidationError);
    EXPECT_THROW(read("N=1 axes=2\n"), ValidationError);
    EXPECT_THROW(read("# N=1 axes=2 h=1 t0=0\n"), ValidationError);
    EXPECT_THROW(read("# N=2 axes=2 h=1 t0=0 dt=0\n"), ValidationError);
    EXPECT_THROW(read("# N=1 axes=2 h=x t0=0 dt=0\n"), ValidationError);
    EXPECT_THROW(read("# N=1 axes=2 bogus h=1 t0=0 dt=0\n"), ValidationError);
    EXPECT_THROW(read(head + "-0.5,0,1\n"), ValidationError);
    EXPECT_THROW(read(head + "-0.5,0,1\n0.5,2\n"), ValidationError);
    EXPECT_THROW(read(head + "-0.5,0,1\n0.5,0,2z\n"), ValidationError);
    EXPECT_THROW(read(head + "-0.5,0,1\n0.5,0,2\n1.5,0,3\n"), ValidationError);
    EXPECT_THROW(read_field_csv(std::string("/nonexistent/field.csv")), ValidationError);

    const auto single = read(head + "-0.5,0,1\n0.5,0,2\n");
    EXPECT_THROW(single.space_time(), ValidationError);
    EXPECT_THROW(single.level(1), ValidationError);
}
