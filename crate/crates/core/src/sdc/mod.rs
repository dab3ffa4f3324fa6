//! Input-side disclosure control: record swapping and cell suppression.

mod suppression;
mod swap;

pub use suppression::{
    audit_ranges, audit_recoverable, primary_suppress, secondary_suppress, secondary_suppress_with,
    standard_marginals, FeasibleRange, SuppressionPlan,
};
pub use swap::{swap, SwapConfig, SwapOutcome, SwapStats};
