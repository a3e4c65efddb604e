pub mod estimate;
pub mod eval;
pub mod gen;
pub mod gradcheck;
pub mod ledger;
pub mod train;
