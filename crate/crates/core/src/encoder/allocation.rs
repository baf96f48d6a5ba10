use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Bits per component; `bits` always sums to `total`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitAllocation {
    pub bits: Vec<usize>,
    pub total: usize,
}

impl BitAllocation {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Bit offset of each component from the most significant end.
    pub fn offsets(&self) -> Vec<usize> {
        self.bits
            .iter()
            .scan(0, |acc, &b| {
                let start = *acc;
                *acc += b;
                Some(start)
            })
            .collect()
    }
}

fn round_half_even(x: f64) -> f64 {
    let r = x.round();
    if (x - x.trunc()).abs() == 0.5 && r % 2.0 != 0.0 {
        r - x.signum()
    } else {
        r
    }
}

/// Splits `n_bits` across components in proportion to their scores.
///
/// Starts from the half-to-even rounding of each ideal share `q_d`, then repairs the sum
/// one bit at a time: a missing bit goes to the component with the largest `q_d - b_d`,
/// a surplus bit comes from the component with the largest `b_d - q_d`. Lower indices
/// take precedence on ties, i.e. they gain first and lose last. All-zero scores fall
/// back to an even split with the remainder on the lowest indices.
pub fn allocate_bits<T: Real>(scores: &[T], n_bits: usize) -> BitAllocation {
    let d = scores.len();
    assert!(d > 0, "allocation needs at least one component");
    let total: f64 = scores.iter().map(|s| s.as_f64().max(0.0)).sum();
    if !(total > 0.0) {
        let base = n_bits / d;
        let extra = n_bits % d;
        return BitAllocation {
            bits: (0..d).map(|k| base + usize::from(k < extra)).collect(),
            total: n_bits,
        };
    }
    let ideal: Vec<f64> = scores
        .iter()
        .map(|s| n_bits as f64 * s.as_f64().max(0.0) / total)
        .collect();
    let mut bits: Vec<usize> = ideal.iter().map(|&q| round_half_even(q) as usize).collect();
    let mut sum: usize = bits.iter().sum();
    while sum < n_bits {
        let mut best = 0;
        for k in 1..d {
            if ideal[k] - bits[k] as f64 > ideal[best] - bits[best] as f64 {
                best = k;
            }
        }
        bits[best] += 1;
        sum += 1;
    }
    while sum > n_bits {
        let mut best: Option<usize> = None;
        for k in 0..d {
            if bits[k] == 0 {
                continue;
            }
            let surplus = bits[k] as f64 - ideal[k];
            match best {
                Some(b) if surplus < bits[b] as f64 - ideal[b] => {}
                _ => best = Some(k),
            }
        }
        let b = best.expect("positive sum has a nonzero component");
        bits[b] -= 1;
        sum -= 1;
    }
    BitAllocation {
        bits,
        total: n_bits,
    }
}
