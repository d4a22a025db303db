//! The measured exponent `α(Q,D) = log|Q(D)| / log|D|`.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::relational::{Database, Query, Table};

/// `log₂` of an arbitrarily large integer; `-∞` for zero.
pub fn log2_big(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        return n.to_f64().expect("fits in f64").log2();
    }
    // keep the top 64 bits and add the discarded exponent back
    let shift = bits - 64;
    let top: BigUint = n >> shift;
    top.to_f64().unwrap().log2() + shift as f64
}

/// `log₂ join / log₂ db`, or `None` when `db ≤ 1` or `join = 0`.
pub fn alpha_from_sizes(join: &BigUint, db: &BigUint) -> Option<f64> {
    if join.is_zero() || *db <= BigUint::from(1u8) {
        return None;
    }
    Some(log2_big(join) / log2_big(db))
}

/// `α(Q,D)` for an evaluated join result; `|D|` is the largest joined table.
pub fn measure_alpha(q: &Query, db: &Database, join: &Table) -> Option<f64> {
    alpha_from_sizes(&BigUint::from(join.len()), &BigUint::from(db.max_size(q)))
}
