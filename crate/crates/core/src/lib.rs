pub mod error;
pub mod tree;
pub mod signal;
pub mod filter;
pub mod explore;
pub mod exact;
pub mod robust;
pub mod recursive;
