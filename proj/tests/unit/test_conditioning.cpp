// Copyright (C) 2026 The vecplan Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "fixtures.hpp"
#include "vecplan/conditioning.hpp"
#include "vecplan/diffusion.hpp"
#include "vecplan/errors.hpp"

using namespace vecplan;

using vecplan::testing::error_code_of;

TEST_CASE("condition sets parse and print") {
    CHECK(ConditionSet::parse("B+Rn+Rc").to_string() == "B+Rn+Rc");
    CHECK(ConditionSet::parse("nodes").to_string() == "Rn+Rc+Rsl");
    CHECK(ConditionSet::parse("B + adj").to_string() == "B+Ra");
    CHECK(ConditionSet::parse("none").empty());
    CHECK(ConditionSet::parse("").empty());
    CHECK(error_code_of([] { ConditionSet::parse("B+Xy"); }) == ErrorCode::InvalidArgument);
    CHECK(ConditionSet::parse("B+Rn+Rc").contains(ConditionSet::parse("B+Rc")));
    CHECK(!ConditionSet::parse("B").contains(ConditionSet::parse("B+Rn")));
}

TEST_CASE("conditioning from a plan follows canonical room order") {
    const auto plan = vecplan::testing::two_room_plan();
    const auto c = Conditioning::from_plan(plan, ConditionSet::parse("B+Rn+Rc+Rsl+Ra"));
    REQUIRE(c.categories);
    CHECK(c.room_count == 2);
    CHECK((*c.categories)[0] == RoomCategory::Living);
    CHECK((*c.sizes_locations)[0] == SizeLocation{0.5, 0.25, 0.5});
    CHECK(c.adjacency->connected(0, 1));
    CHECK(!c.partial);
}

TEST_CASE("extra or inconsistent blocks are rejected") {
    const auto plan = vecplan::testing::two_room_plan();
    const auto full = Conditioning::from_plan(plan, ConditionSet::parse("B+Rn+Rc"));
    CHECK(error_code_of([&] { check_conditioning(full, ConditionSet::parse("B+Rn"), StageKind::Nodes); }) ==
          ErrorCode::ConditioningMismatch);
    CHECK_NOTHROW(check_conditioning(full, ConditionSet::parse("B+Rn+Rc"), StageKind::Nodes));
    // Missing blocks are allowed.
    CHECK_NOTHROW(check_conditioning(Conditioning{}, ConditionSet::parse("B+Rn+Rc"), StageKind::Nodes));

    Conditioning bad = full;
    bad.room_count = 3;
    CHECK(error_code_of([&] { check_conditioning(bad, ConditionSet::parse("B+Rn+Rc"), StageKind::Nodes); }) ==
          ErrorCode::ConditioningMismatch);
    bad.room_count = 9;
    CHECK(error_code_of([&] { check_conditioning(bad, ConditionSet::parse("B+Rn+Rc"), StageKind::Nodes); }) ==
          ErrorCode::InvalidArgument);

    Conditioning many;
    many.categories = std::vector<RoomCategory>(9, RoomCategory::Bedroom);
    CHECK(error_code_of([&] { check_conditioning(many, ConditionSet::parse("Rc"), StageKind::Nodes); }) ==
          ErrorCode::TooManyRooms);

    Conditioning partial;
    partial.partial = PartialInput{StageTensor::filled(StageKind::Adjacency, -1.0), std::vector<std::uint8_t>(28, 0)};
    CHECK(error_code_of([&] { check_conditioning(partial, ConditionSet::parse("P"), StageKind::Nodes); }) ==
          ErrorCode::ConditioningMismatch);
    CHECK_NOTHROW(check_conditioning(partial, ConditionSet::parse("P"), StageKind::Adjacency));
    partial.partial->known.resize(8);
    CHECK(error_code_of([&] { check_conditioning(partial, ConditionSet::parse("P"), StageKind::Adjacency); }) ==
          ErrorCode::ShapeMismatch);
}

TEST_CASE("features encode each block") {
    const auto plan = vecplan::testing::two_room_plan();
    const auto cs = ConditionSet::parse("B+Rn+Rc+Rsl");
    const auto f = featurize(Conditioning::from_plan(plan, cs), cs, StageKind::Nodes);
    CHECK(f.has_boundary);
    CHECK(f.boundary.rows() == 4);
    CHECK(f.boundary.cols() == 20);
    CHECK(f.room_count.sum() == 1.0);
    CHECK(f.room_count(0, 1) == 1.0);
    CHECK(f.categories(0, static_cast<int>(RoomCategory::Living) - 1) == 1.0);
    CHECK(f.categories(2, kCategoryCount) == 1.0);
    CHECK(f.sizes_locations(0, 3) == 1.0);
    CHECK(f.sizes_locations(2, 3) == 0.0);
    CHECK(!f.has_adjacency);
}

TEST_CASE("partial features zero the unknown values") {
    StageTensor v = StageTensor::filled(StageKind::Nodes, 0.5);
    std::vector<std::uint8_t> known(8, 0);
    known[1] = 1;
    Conditioning c;
    c.partial = PartialInput{v, known};
    const auto f = featurize(c, ConditionSet::parse("P"), StageKind::Nodes);
    CHECK(f.partial.cols() == 10);
    CHECK(f.partial.row(1).leftCols(5).sum() == doctest::Approx(2.5));
    CHECK(f.partial.row(0).sum() == 0.0);
    CHECK(f.partial.row(1).rightCols(5).sum() == 5.0);
}
