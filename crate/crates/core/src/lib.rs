//! Sphere decoding for mixed-integer least squares and its use in a
//! weighted-MMSE design of quantised precoders and RIS reflection
//! coefficients for the multi-user MIMO downlink.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod exp;
pub mod linalg;
pub mod metrics;
pub mod mils;
pub mod quantizer;
pub mod seeds;
pub mod wmmse;
