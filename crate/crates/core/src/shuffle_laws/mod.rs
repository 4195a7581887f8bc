//! Exact laws of `m`-shuffles, `p`-shuffles and their compositions on
//! rising-sequence classes, with exact total variation and brute-force
//! oracles.

mod law;
pub mod oracle;
mod pack;

pub use law::{
    b_set_gap, law_after_k, q_nm, q_nm_u64, tail_set_gap, tv_to_uniform, BSetGap, LawEntry,
    LawExport, RisingSeqLaw,
};
pub use oracle::{oracle_convolution, oracle_convolution_sequence, oracle_digit_law};
pub use pack::{
    product_power, product_power_with_limit, PackDistribution, ProductLaw, DEFAULT_ATOM_LIMIT,
};
