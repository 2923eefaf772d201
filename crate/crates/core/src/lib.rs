pub mod harness;
pub mod io;
pub mod logic;
pub mod prada;
pub mod rules;
pub mod tree;
