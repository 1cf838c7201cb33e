use super::{Alphabet, Letter, ReducedWord};
use crate::error::{Error, Result};

/// Largest enumeration any operation performs unless told otherwise.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// |S_R| = 2k(2k−1)^{R−1} for R ≥ 1.
pub fn count_sphere(alphabet: &Alphabet, radius: usize) -> u128 {
    if radius == 0 {
        return 1;
    }
    let q = alphabet.branching() as u128;
    (alphabet.size() as u128).saturating_mul(q.saturating_pow(radius as u32 - 1))
}

pub fn count_ball(alphabet: &Alphabet, radius: usize) -> u128 {
    (0..=radius).map(|r| count_sphere(alphabet, r)).fold(0u128, u128::saturating_add)
}

fn check_cap(requested: u128, cap: u128) -> Result<()> {
    if requested > cap {
        return Err(Error::EnumerationCap { requested, cap });
    }
    Ok(())
}

/// All reduced words of letter-length exactly `radius`, in lexicographic order.
pub fn sphere(alphabet: &Alphabet, radius: usize, cap: u128) -> Result<Vec<ReducedWord>> {
    check_cap(count_sphere(alphabet, radius), cap)?;
    let mut out = Vec::with_capacity(count_sphere(alphabet, radius) as usize);
    let mut stack = Vec::with_capacity(radius);
    extend_all(alphabet, radius, &mut stack, &mut out);
    Ok(out)
}

fn extend_all(alphabet: &Alphabet, remaining: usize, stack: &mut Vec<Letter>, out: &mut Vec<ReducedWord>) {
    if remaining == 0 {
        out.push(ReducedWord::from_vec_unchecked(stack.clone()));
        return;
    }
    for t in alphabet.successors(stack.last().copied()) {
        stack.push(t);
        extend_all(alphabet, remaining - 1, stack, out);
        stack.pop();
    }
}

/// All reduced words of letter-length at most `radius`, in shortlex order.
pub fn ball(alphabet: &Alphabet, radius: usize, cap: u128) -> Result<Vec<ReducedWord>> {
    check_cap(count_ball(alphabet, radius), cap)?;
    let mut out = Vec::with_capacity(count_ball(alphabet, radius) as usize);
    for r in 0..=radius {
        out.extend(sphere(alphabet, r, cap)?);
    }
    Ok(out)
}

/// Nontrivial cyclically reduced words of letter-length at most `max_len`.
pub fn cyclic_cores(alphabet: &Alphabet, max_len: usize, cap: u128) -> Result<Vec<ReducedWord>> {
    Ok(ball(alphabet, max_len, cap)?
        .into_iter()
        .filter(|w| !w.is_identity() && w.is_cyclically_reduced())
        .collect())
}
