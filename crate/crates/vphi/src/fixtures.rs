//! Shared test programs, loaded from the example corpus so unit tests and
//! the runnable examples exercise the same files.

pub(crate) const DIAMOND: &str = include_str!("../examples/data/diamond.ir");
pub(crate) const DIAMOND_MUL: &str = include_str!("../examples/data/diamond_mul.ir");
pub(crate) const LOOP: &str = include_str!("../examples/data/loop.ir");
pub(crate) const STRAIGHTLINE: &str = include_str!("../examples/data/straightline.ir");
pub(crate) const TWO_JOINS: &str = include_str!("../examples/data/two_joins.ir");
pub(crate) const EMPTY: &str = include_str!("../examples/data/empty.ir");
