pub mod cli;
pub mod decompose;
pub mod effects;
pub mod error;
pub mod gen;
pub mod liftings;
pub mod logic;
pub mod relator;
pub mod sexp;
pub mod syntax;
pub mod testlogic;
pub mod trees;
pub mod verdict;
