#include <gtest/gtest.h>

#include "sheetagent/codec.hpp"
#include "sheetagent/formula.hpp"
#include "properties.hpp"

using namespace sheetagent;
using testsupport::Rng;

using testsupport::numeric_spec;

TEST(Workbook, FreshWorkbookHasSheet1) {
    Workbook wb;
    ASSERT_EQ(wb.sheets().size(), 1u);
    EXPECT_EQ(wb.sheets()[0].name, "Sheet1");
    EXPECT_TRUE(wb.sheets()[0].tables.empty());
}

TEST(PlaceTable, RandomAttemptsNeverOverlap) {
    const auto rep = testsupport::placement_property(1000, 1000);
    ASSERT_TRUE(rep.ok()) << *rep.failure;
    EXPECT_GT(rep.accepted, 0);
    EXPECT_GT(rep.rejected, 0);
}

TEST(PlaceTable, RejectsDuplicatesAndUnknownSheets) {
    Workbook wb;
    place_table(wb, "Sheet1", numeric_spec("A", 2, 2), {1, 1, std::nullopt});
    EXPECT_THROW(place_table(wb, "Sheet1", numeric_spec("a", 2, 2), {10, 10, std::nullopt}), DuplicateName);
    EXPECT_THROW(place_table(wb, "Nope", numeric_spec("B", 2, 2), {10, 10, std::nullopt}), NotFound);
    TableSpec empty;
    empty.name = "E";
    EXPECT_THROW(place_table(wb, "Sheet1", empty, {10, 10, std::nullopt}), InvalidTable);
}

TEST(FirstFreeAnchor, KeepsGapAndNeverOverlaps) {
    Rng rng(77);
    Workbook wb;
    for (int i = 0; i < 40; ++i) {
        const int w = rng.range(1, 6), h = rng.range(1, 8);
        const CellAddress at = first_free_anchor(wb.sheets()[0], w, h + 1);
        place_table(wb, "Sheet1", numeric_spec("T" + std::to_string(i), w, h), at);
        const auto& tables = wb.sheets()[0].tables;
        for (std::size_t a = 0; a + 1 < tables.size(); ++a)
            ASSERT_FALSE(tables.back().rect().inflated(1).intersects(tables[a].rect()));
    }
}

TEST(Roles, TemplateTaxonomy) {
    Workbook wb;
    TableSpec data;
    data.name = "D";
    data.columns = {{"Qty", ValueType::Number}, {"Price", ValueType::Currency}, {"Line", ValueType::Currency}};
    for (int i = 0; i < 3; ++i) {
        Row r = testsupport::number_row({static_cast<double>(i + 1), 2.5});
        r.cells.push_back(Cell::formula(make_formula("=A" + std::to_string(i + 2) + "*B" + std::to_string(i + 2))));
        data.rows.push_back(std::move(r));
    }
    Row totals;
    totals.aggregate = true;
    totals.cells = {Cell::literal(Value::text("Total")), Cell::literal(Value::empty()), Cell::formula(make_formula("=SUM(C2:C4)"))};
    data.rows.push_back(std::move(totals));
    place_table(wb, "Sheet1", std::move(data), {1, 1, std::nullopt});

    auto one_cell = [&](const std::string& name, ColumnSpec col, Cell cell, int column) {
        TableSpec t;
        t.name = name;
        t.kind = TableKind::Insight;
        t.columns = {std::move(col)};
        Row r;
        r.cells.push_back(std::move(cell));
        t.rows.push_back(std::move(r));
        place_table(wb, "Sheet1", std::move(t), {column, 1, std::nullopt});
    };
    one_cell("Link", {"Linked", ValueType::Currency}, Cell::formula(make_formula("=C5")), 5);
    one_cell("Grand", {"Grand", ValueType::Currency}, Cell::formula(make_formula("=SUM(E2:E2)")), 7);
    one_cell("Params", {"Include", ValueType::Boolean}, Cell::literal(Value::boolean(true)), 9);
    recalculate(wb);

    const Table& d = *wb.find_table("D");
    EXPECT_EQ(classify_cell_role(wb, d, {3, 2, std::nullopt}), CellRole::TransformCell);
    EXPECT_EQ(classify_cell_role(wb, d, {3, 5, std::nullopt}), CellRole::AggregationCell);
    EXPECT_EQ(classify_cell_role(wb, d, {1, 2, std::nullopt}), CellRole::Plain);
    EXPECT_EQ(classify_cell_role(wb, *wb.find_table("Link"), {5, 2, std::nullopt}), CellRole::AggregationReferenceCell);
    EXPECT_EQ(classify_cell_role(wb, *wb.find_table("Grand"), {7, 2, std::nullopt}), CellRole::TableAggregationCell);
    EXPECT_EQ(classify_cell_role(wb, *wb.find_table("Params"), {9, 2, std::nullopt}), CellRole::ParameterCell);
    EXPECT_THROW(classify_cell_role(wb, d, {9, 9, std::nullopt}), AddressOutsideTable);
    EXPECT_EQ(d.rows.back().cells[2].cached, Value::number(15));
    EXPECT_EQ(wb.find_table("Grand")->rows[0].cells[0].cached, Value::number(15));
    EXPECT_EQ(d.rows[0].cells[2].role, CellRole::TransformCell);
}

TEST(UndoStack, BoundedLifo) {
    UndoStack stack(3);
    Workbook wb;
    for (int i = 0; i < 5; ++i) {
        wb.touch();
        stack.push(snapshot(wb));
    }
    EXPECT_EQ(stack.size(), 3u);
    EXPECT_EQ(stack.bottom().state.revision(), 3u);
    EXPECT_EQ(stack.pop()->state.revision(), 5u);
    EXPECT_EQ(stack.pop()->state.revision(), 4u);
    EXPECT_EQ(stack.pop()->state.revision(), 3u);
    EXPECT_FALSE(stack.pop());
}

TEST(UndoStack, RestoreKeepsRevisionMoving) {
    Workbook wb;
    const Snapshot before = snapshot(wb);
    const std::string bytes = serialize_state(wb);
    place_table(wb, "Sheet1", numeric_spec("X", 1, 1), {1, 1, std::nullopt});
    wb.touch();
    const auto rev = wb.revision();
    restore(wb, before);
    EXPECT_EQ(serialize_state(wb), bytes);
    EXPECT_GT(wb.revision(), rev);
}
