//! Shared numeric tolerances and default resource caps.

/// Absolute tolerance for every floating-point (entropy / logarithm) comparison.
pub const TOLERANCE: f64 = 1e-9;

/// Largest attribute set for which subset-lattice LPs are built (`2^n` variables).
pub const DEFAULT_LATTICE_CAP: usize = 12;

/// Largest attribute set for entropy vectors.
pub const DEFAULT_ENTROPY_CAP: usize = 16;

/// Largest number of rows any generator or power construction may materialize per table.
pub const DEFAULT_ROW_LIMIT: u64 = 200_000;

/// Separator for tuple-valued cells (power databases and synthesized coset labels).
pub const TUPLE_SEPARATOR: char = '|';

pub const PLACEHOLDER_OPEN: char = '⟨';
pub const PLACEHOLDER_CLOSE: char = '⟩';
