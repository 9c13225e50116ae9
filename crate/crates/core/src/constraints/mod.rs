//! Density expressions, ordinary and decorated constraints, and the part
//! tables that decorated constraints refer to.

mod eval;
mod expr;
mod parse;
mod parts;

pub use eval::{
    decorated_probability, evaluate_decorated, evaluate_ordinary, DecoratedEstimate,
    DecoratedOptions, Estimator, RootStats, SatisfactionVerdict, SideValue, Status,
    NULL_CONFIDENCE, NULL_RATE, SIGMA,
};
pub use expr::{render_constraint, Constraint, DecoratedGraph, DecoratedVertex, Expr, GraphTerm};
pub use parse::{
    alias, expand_unspecified, parse_constraint, parse_constraint_file, parse_expression,
    ConstraintFile,
};
pub use parts::{partition_by_degree, DegreeRule, PartEntry, PartSampler, PartTable};
