pub mod bench;
pub mod corrupt;
pub mod eval;
pub mod inspect;
pub mod synth;
pub mod value;
