pub mod error;
pub mod gff;
pub mod kernels;
pub mod lattice;
pub mod linalg;
pub mod loewner;
pub mod loops;
pub mod ust;
pub mod util;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
