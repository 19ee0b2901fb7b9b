#pragma once

#include <string>
#include <vector>

#include "qunits/store.hpp"

namespace qunits {

struct ColumnRef {
  std::string table;
  std::string column;
  std::string str() const { return table + "." + column; }
  friend bool operator==(const ColumnRef& a, const ColumnRef& b) {
    return a.table == b.table && a.column == b.column;
  }
};

struct JoinPredicate {
  ColumnRef left;
  ColumnRef right;
};

// Anchored conjunctive query: equi-joins along FK edges plus exactly one
// `anchor.column = $x` predicate.
struct BaseExpression {
  std::vector<std::string> tables;
  std::vector<JoinPredicate> joins;
  ColumnRef anchor;
};

struct ForEachGroup {
  std::string element;
  std::vector<ColumnRef> columns;
};

struct ConversionExpression {
  std::string label;
  std::vector<ForEachGroup> groups;
};

enum class Provenance { Manual, SchemaData, QueryLog, ExternalEvidence };

const char* provenance_name(Provenance p);

struct QunitDefinition {
  std::string id;
  BaseExpression base;
  ConversionExpression conversion;
  double utility = 1.0;
  Provenance provenance = Provenance::Manual;
};

// Checks every structural invariant: tables and columns exist, every join is
// an FK edge of the schema, the join graph is connected, the anchor is a text
// column of a base table, and all projected columns belong to base tables.
// Returns the definition unchanged on success.
QunitDefinition validate_definition(const QunitDefinition& def, const Schema& schema);

struct QunitInstance {
  std::string definition_id;
  std::string anchor_value;
  std::string label;
  std::string anchor_attribute;  // display name for the bound parameter
  std::vector<std::string> group_elements;
  std::vector<std::vector<Row>> groups;  // per group, projected tuples in order
};

// Evaluates the base expression with the anchor bound (case-insensitive) and
// projects each conversion group. Result tuples are ordered by the primary
// keys of the joined tables, in base-table order. Throws NotFoundError when
// the anchor value is absent from the anchor column.
QunitInstance instantiate(const QunitDefinition& def, const std::string& binding,
                          const Dataset& dataset);

// One instance per distinct anchor value (case-insensitive), in value order.
std::vector<QunitInstance> enumerate_instances(const QunitDefinition& def,
                                               const Dataset& dataset);

struct RenderedInstance {
  std::string instance_id;     // "<definition id>/<anchor value>"
  std::string definition_id;
  std::string anchor_value;
  std::string display;                    // nested, human-readable
  std::vector<std::string> index_tokens;  // anchor value + label + projected values
};

RenderedInstance render(const QunitInstance& instance);

// Definition file format, one or more definitions per file:
//   qunit <id> utility <real>
//   from <t1> <t2> ...
//   join <t.c> = <t.c>
//   anchor <t.c>
//   label <name>
//   foreach <name>: <t.c>,<t.c>,...
std::vector<QunitDefinition> parse_definitions(const std::string& text);
std::string serialize_definitions(const std::vector<QunitDefinition>& defs);

}  // namespace qunits
