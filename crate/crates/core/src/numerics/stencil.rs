use std::fmt;
use std::ops::{Div, Mul, Sub};
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum StencilError {
    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    Order(usize),
    #[error("unsupported accuracy {0} (expected 2, 4, 6 or 8)")]
    Accuracy(usize),
    #[error("grid spacing must be positive and finite, got {0}")]
    Spacing(f64),
}

/// Exact rational used while generating weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ratio {
    pub num: i128,
    pub den: i128,
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ratio {
    pub fn new(num: i128, den: i128) -> Ratio {
        assert!(den != 0, "zero denominator");
        let g = gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Ratio {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn int(v: i128) -> Ratio {
        Ratio { num: v, den: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Sub for Ratio {
    type Output = Ratio;
    fn sub(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den - o.num * self.den, self.den * o.den)
    }
}

impl Mul for Ratio {
    type Output = Ratio;
    fn mul(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.num, self.den * o.den)
    }
}

impl Div for Ratio {
    type Output = Ratio;
    fn div(self, o: Ratio) -> Ratio {
        Ratio::new(self.num * o.den, self.den * o.num)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

fn check(order: usize, acc: usize) -> Result<(), StencilError> {
    if !(1..=2).contains(&order) {
        return Err(StencilError::Order(order));
    }
    if !matches!(acc, 2 | 4 | 6 | 8) {
        return Err(StencilError::Accuracy(acc));
    }
    Ok(())
}

/// Exact central-difference weights for offsets `-r..=r`, `r = acc / 2`,
/// by Fornberg's recursion on the nodes ordered from `-r` to `r`.
pub fn exact_weights(order: usize, acc: usize) -> Result<Vec<Ratio>, StencilError> {
    check(order, acc)?;
    let r = (acc / 2) as i128;
    let x: Vec<Ratio> = (-r..=r).map(Ratio::int).collect();
    let n = x.len();
    let m = order;
    let zero = Ratio::int(0);
    let mut c = vec![vec![zero; m + 1]; n];
    c[0][0] = Ratio::int(1);
    let mut c1 = Ratio::int(1);
    let mut c4 = x[0];
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = Ratio::int(1);
        let c5 = c4;
        c4 = x[i];
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kk = Ratio::int(k as i128);
                    c[i][k] = c1 * (kk * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = zero - c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                let kk = Ratio::int(k as i128);
                c[j][k] = (c4 * c[j][k] - kk * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    Ok(c.into_iter().map(|row| row[m]).collect())
}

/// Central stencil weights for one derivative order, already divided by
/// `h^order`. `weights[k]` multiplies the value at offset `k - radius`.
#[derive(Clone, Debug, PartialEq)]
pub struct StencilCoeffs {
    pub order: usize,
    pub acc: usize,
    pub radius: usize,
    pub h: f64,
    /// Unscaled weights (exact rationals rounded once).
    pub unit: Vec<f64>,
    pub weights: Vec<f64>,
}

impl StencilCoeffs {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn stencil_coeffs(order: usize, acc: usize, h: f64) -> Result<StencilCoeffs, StencilError> {
    if !(h.is_finite() && h > 0.0) {
        return Err(StencilError::Spacing(h));
    }
    let unit: Vec<f64> = exact_weights(order, acc)?
        .into_iter()
        .map(Ratio::to_f64)
        .collect();
    let scale = h.powi(order as i32);
    let weights = unit.iter().map(|c| c / scale).collect();
    Ok(StencilCoeffs {
        order,
        acc,
        radius: acc / 2,
        h,
        unit,
        weights,
    })
}
