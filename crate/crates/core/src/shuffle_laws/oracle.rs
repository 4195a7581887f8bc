//! Brute-force oracles over the full symmetric group. Independent of the
//! closed-form laws: single-step laws come from enumerating digit words.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Pow, Zero};

use super::law::RisingSeqLaw;
use super::pack::PackDistribution;
use crate::combinatorics::{all_arrangements, rising_sequences, shared_row, DeckArrangement};
use crate::error::{Result, RiffleError};

/// Largest number of digit words `m^n` the digit oracle will enumerate.
pub const DIGIT_WORD_LIMIT: u128 = 10_000_000;
/// Largest deck the group-convolution oracle accepts.
pub const CONVOLUTION_MAX_N: usize = 7;

/// A law on all `n!` arrangements, indexed by lexicographic rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationLaw {
    n: usize,
    nums: Vec<BigUint>,
    den: BigUint,
}

impl PermutationLaw {
    pub fn identity(n: usize) -> Self {
        let size = all_arrangements_len(n);
        let mut nums = vec![BigUint::zero(); size];
        nums[0] = BigUint::one();
        Self {
            n,
            nums,
            den: BigUint::one(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Probability numerators by rank, over [`denominator`](Self::denominator).
    pub fn numerators(&self) -> &[BigUint] {
        &self.nums
    }

    pub fn denominator(&self) -> &BigUint {
        &self.den
    }

    /// Law of `X` followed by an independent `Y`-shuffle, `X ~ self`, `Y ~ next`.
    pub fn then(&self, next: &PermutationLaw, arrangements: &[DeckArrangement]) -> Self {
        let mut nums = vec![BigUint::zero(); self.nums.len()];
        for (i, a) in self.nums.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in next.nums.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                let composed = arrangements[i].then(&arrangements[j]);
                nums[composed.rank()] += a * b;
            }
        }
        Self {
            n: self.n,
            nums,
            den: &self.den * &next.den,
        }
    }

    /// Projects onto rising-sequence classes, failing if the law is not
    /// constant on a class.
    pub fn to_rising_seq_law(&self, arrangements: &[DeckArrangement]) -> Result<RisingSeqLaw> {
        let mut class_value: Vec<Option<&BigUint>> = vec![None; self.n];
        for (arr, value) in arrangements.iter().zip(&self.nums) {
            let slot = &mut class_value[rising_sequences(arr) - 1];
            match slot {
                None => *slot = Some(value),
                Some(v) if *v == value => {}
                Some(_) => {
                    return Err(RiffleError::InvariantViolation(format!(
                        "law is not constant on the class of {:?}",
                        arr.values()
                    )))
                }
            }
        }
        let nums = class_value
            .into_iter()
            .map(|v| v.cloned().expect("every class is non-empty"))
            .collect();
        RisingSeqLaw::from_parts(shared_row(self.n)?, nums, self.den.clone())
    }
}

fn all_arrangements_len(n: usize) -> usize {
    (1..=n).product()
}

fn digit_words_guard(n: usize, m: u64) -> Result<()> {
    let words = (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if words > DIGIT_WORD_LIMIT {
        return Err(RiffleError::SizeGuard {
            what: "digit words m^n",
            requested: words,
            limit: DIGIT_WORD_LIMIT,
        });
    }
    Ok(())
}

/// Tallies the `m`-shuffle over all `m^n` equally likely digit words: the
/// word assigns each final position the pack its card came from, and the
/// card there is its rank in the stable sort of positions by digit.
pub fn m_shuffle_permutation_law(n: usize, m: u64) -> Result<PermutationLaw> {
    if n == 0 || m == 0 {
        return Err(RiffleError::Domain("oracle requires n >= 1 and m >= 1".into()));
    }
    digit_words_guard(n, m)?;
    if n > 10 {
        return Err(RiffleError::SizeGuard {
            what: "deck size for permutation enumeration",
            requested: n as u128,
            limit: 10,
        });
    }
    let mut tally = vec![0u64; all_arrangements_len(n)];
    let mut word = vec![0u64; n];
    let mut values = vec![0u32; n];
    let mut pack_sizes = vec![0u32; m as usize];
    loop {
        pack_sizes.iter_mut().for_each(|s| *s = 0);
        for &d in &word {
            pack_sizes[d as usize] += 1;
        }
        // running offsets: first value assigned to each pack
        let mut next_value = vec![0u32; m as usize];
        let mut acc = 1;
        for (slot, size) in next_value.iter_mut().zip(&pack_sizes) {
            *slot = acc;
            acc += size;
        }
        for (v, &d) in values.iter_mut().zip(&word) {
            *v = next_value[d as usize];
            next_value[d as usize] += 1;
        }
        tally[DeckArrangement::from_vec_unchecked(values.clone()).rank()] += 1;

        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                let nums = tally.into_iter().map(BigUint::from).collect();
                return Ok(PermutationLaw {
                    n,
                    nums,
                    den: Pow::pow(&BigUint::from(m), n),
                });
            }
            word[i] += 1;
            if word[i] < m {
                break;
            }
            word[i] = 0;
            i += 1;
        }
    }
}

/// `Q_{n,m}` obtained from the digit-word enumeration alone.
pub fn oracle_digit_law(n: usize, m: u64) -> Result<RisingSeqLaw> {
    let law = m_shuffle_permutation_law(n, m)?;
    law.to_rising_seq_law(&all_arrangements(n))
}

/// Single `p`-shuffle law on `S_n`: the `p`-mixture of the digit-word laws.
pub fn p_shuffle_permutation_law(n: usize, p: &PackDistribution) -> Result<PermutationLaw> {
    let parts = p
        .atoms()
        .iter()
        .map(|(m, w)| Ok((m_shuffle_permutation_law(n, *m)?, w)))
        .collect::<Result<Vec<_>>>()?;
    let lcm = parts.iter().fold(BigUint::one(), |acc, (law, w)| {
        acc.lcm(&(&law.den * w.denom().magnitude()))
    });
    let mut nums = vec![BigUint::zero(); all_arrangements_len(n)];
    for (law, w) in &parts {
        let scale = w.numer().magnitude() * (&lcm / (&law.den * w.denom().magnitude()));
        for (acc, a) in nums.iter_mut().zip(&law.nums) {
            *acc += a * &scale;
        }
    }
    Ok(PermutationLaw { n, nums, den: lcm })
}

/// Law after `k` independent `p`-shuffles by explicit convolution over `S_n`,
/// projected to rising-sequence classes.
pub fn oracle_convolution(n: usize, p: &PackDistribution, k: usize) -> Result<RisingSeqLaw> {
    let steps = vec![p.clone(); k];
    oracle_convolution_sequence(n, &steps)
}

/// Convolution of possibly different shuffles applied in order.
pub fn oracle_convolution_sequence(n: usize, steps: &[PackDistribution]) -> Result<RisingSeqLaw> {
    if n == 0 {
        return Err(RiffleError::Domain("deck size must be >= 1".into()));
    }
    if n > CONVOLUTION_MAX_N {
        return Err(RiffleError::SizeGuard {
            what: "deck size for group convolution",
            requested: n as u128,
            limit: CONVOLUTION_MAX_N as u128,
        });
    }
    let arrangements = all_arrangements(n);
    let mut law = PermutationLaw::identity(n);
    for step in steps {
        let single = p_shuffle_permutation_law(n, step)?;
        law = law.then(&single, &arrangements);
    }
    law.to_rising_seq_law(&arrangements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::ExactProb;
    use crate::shuffle_laws::{law_after_k, q_nm_u64};

    #[test]
    fn two_cards_two_packs() {
        let law = oracle_digit_law(2, 2).unwrap();
        assert_eq!(
            law.class_probs(),
            vec![
                ExactProb::from_parts(3u8, 4u8).unwrap(),
                ExactProb::from_parts(1u8, 4u8).unwrap()
            ]
        );
    }

    #[test]
    fn single_card_is_point_mass() {
        for m in 1..6 {
            assert_eq!(oracle_digit_law(1, m).unwrap(), RisingSeqLaw::identity(1).unwrap());
        }
    }

    #[test]
    fn digit_law_matches_closed_form() {
        assert_eq!(oracle_digit_law(5, 3).unwrap(), q_nm_u64(5, 3).unwrap());
    }

    #[test]
    fn convolution_matches_composition() {
        let d2 = PackDistribution::point(2).unwrap();
        assert_eq!(oracle_convolution(5, &d2, 2).unwrap(), q_nm_u64(5, 4).unwrap());
        let mix: PackDistribution = "2:1/2,3:1/2".parse().unwrap();
        assert_eq!(
            oracle_convolution(5, &mix, 2).unwrap(),
            law_after_k(5, &mix, 2).unwrap()
        );
        assert_eq!(
            oracle_convolution(4, &mix, 2).unwrap(),
            law_after_k(4, &mix, 2).unwrap()
        );
        assert_eq!(
            oracle_convolution(4, &mix, 1).unwrap(),
            law_after_k(4, &mix, 1).unwrap()
        );
    }

    #[test]
    fn guards() {
        assert!(oracle_digit_law(8, 10).unwrap_err().is_size_guard());
        let d2 = PackDistribution::point(2).unwrap();
        assert!(oracle_convolution(8, &d2, 1).unwrap_err().is_size_guard());
    }
}
