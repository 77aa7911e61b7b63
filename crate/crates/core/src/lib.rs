pub mod arith;
pub mod density;
pub mod endo;
pub mod error;
pub mod fermat;
pub mod heights;
pub mod interval;
pub mod poly;
pub mod search;
