pub mod bench;
pub mod design;
pub mod eval;
pub mod predict;
pub mod simulate;
pub mod store;
