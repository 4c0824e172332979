//! Self-delimiting codes and the integer/string bijection.

use thiserror::Error;

use crate::bits::BitString;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error("unary header is not terminated by a 0")]
    UnterminatedHeader,
    #[error("header announces {expected} payload bits but {actual} remain")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("length numeral has a leading zero")]
    NonCanonicalLength,
    #[error("length does not fit in 64 bits")]
    LengthOverflow,
}

/// `x̄ = 1^{|x|} 0 x`, of length `2|x| + 1`.
pub fn bar_encode(x: &BitString) -> BitString {
    let mut out = BitString::new();
    for _ in 0..x.len() {
        out.push(true);
    }
    out.push(false);
    out.extend_from(x);
    out
}

/// Splits a `1^n 0` header off `code`, returning `n` and the header length.
fn unary_header(code: &BitString) -> Result<usize, CodeError> {
    code.iter()
        .position(|b| !b)
        .ok_or(CodeError::UnterminatedHeader)
}

pub fn bar_decode(code: &BitString) -> Result<BitString, CodeError> {
    let n = unary_header(code)?;
    let actual = code.len() - n - 1;
    if actual != n {
        return Err(CodeError::LengthMismatch {
            expected: n,
            actual,
        });
    }
    Ok(code.slice(n + 1, code.len()))
}

/// Plain positional numeral of `n`, empty for zero.
fn numeral(n: usize) -> BitString {
    let width = (usize::BITS - n.leading_zeros()) as usize;
    BitString::from_uint(n as u64, width)
}

/// `x′ = 1^{||x||} 0 |x| x`, of length `|x| + 2||x|| + 1` where `||x||` is
/// the length of the binary numeral of `|x|`.
pub fn prime_encode(x: &BitString) -> BitString {
    let mut out = bar_encode(&numeral(x.len()));
    out.extend_from(x);
    out
}

pub fn prime_decode(code: &BitString) -> Result<BitString, CodeError> {
    let w = unary_header(code)?;
    let body = code.len() - w - 1;
    if body < w {
        return Err(CodeError::LengthMismatch {
            expected: w,
            actual: body,
        });
    }
    let len_bits = code.slice(w + 1, 2 * w + 1);
    if len_bits.get(0) == Some(false) {
        return Err(CodeError::NonCanonicalLength);
    }
    let n = len_bits.to_uint().ok_or(CodeError::LengthOverflow)? as usize;
    let actual = code.len() - 2 * w - 1;
    if actual != n {
        return Err(CodeError::LengthMismatch {
            expected: n,
            actual,
        });
    }
    Ok(code.slice(2 * w + 1, code.len()))
}

/// The standard bijection ℕ → {0,1}*: 0 ↦ ε, 1 ↦ 0, 2 ↦ 1, 3 ↦ 00, …
///
/// `n` maps to the binary numeral of `n + 1` with its leading 1 removed.
pub fn nat_to_string(n: u64) -> BitString {
    let v = n as u128 + 1;
    let width = (u128::BITS - v.leading_zeros()) as usize - 1;
    BitString::from_bools((0..width).rev().map(|i| (v >> i) & 1 == 1))
}

pub fn string_to_nat(s: &BitString) -> Option<u64> {
    if s.len() >= 64 {
        return None;
    }
    let v = s.iter().fold(1u64, |acc, b| (acc << 1) | b as u64);
    Some(v - 1)
}
