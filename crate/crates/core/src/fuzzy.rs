//! Fuzzy numbers stored as finitely many α-cuts.
//!
//! A fuzzy number on the level grid 0 = α₀ < … < α_K = 1 is the pair of
//! endpoint arrays `lower[k] ≤ upper[k]`, with `lower` nondecreasing and
//! `upper` nonincreasing in k (nested cuts). The supremum over α in the
//! Hausdorff metric is taken over the grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of subintervals in the default uniform level grid.
pub const DEFAULT_LEVELS: usize = 10;

/// Uniform grid {0, 1/k, …, 1}.
pub fn uniform_levels(k: usize) -> Vec<f64> {
    let k = k.max(1);
    (0..=k).map(|i| i as f64 / k as f64).collect()
}

/// How binary operations treat operands on different level grids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridPolicy {
    /// Mismatched grids are an error.
    #[default]
    Strict,
    /// The right operand is resampled onto the left operand's grid.
    Resample,
}

/// Which branch of the generalized Hukuhara difference applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhCase {
    /// u = v ⊕ w
    First,
    /// v = u ⊕ (−1)w
    Second,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuzzyNumber {
    levels: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl FuzzyNumber {
    pub fn new(levels: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        validate_levels(&levels)?;
        let n = levels.len();
        if lower.len() != n || upper.len() != n {
            return Err(Error::InvalidFuzzyNumber(format!(
                "{} levels but {} lower and {} upper endpoints",
                n,
                lower.len(),
                upper.len()
            )));
        }
        let f = FuzzyNumber {
            levels,
            lower,
            upper,
        };
        f.check()?;
        Ok(f)
    }

    pub fn crisp(x: f64) -> Self {
        Self::crisp_on(x, &uniform_levels(DEFAULT_LEVELS))
    }

    /// Crisp value on a given grid. The grid is assumed valid.
    pub fn crisp_on(x: f64, levels: &[f64]) -> Self {
        FuzzyNumber {
            levels: levels.to_vec(),
            lower: vec![x; levels.len()],
            upper: vec![x; levels.len()],
        }
    }

    /// Triangular number (l; m; r): level α is [l + α(m−l), r − α(r−m)].
    pub fn triangular(l: f64, m: f64, r: f64) -> Result<Self> {
        Self::triangular_on(l, m, r, &uniform_levels(DEFAULT_LEVELS))
    }

    pub fn triangular_on(l: f64, m: f64, r: f64, levels: &[f64]) -> Result<Self> {
        if !(l <= m && m <= r) {
            return Err(Error::InvalidFuzzyNumber(format!(
                "triangular ({l}; {m}; {r}) needs l <= m <= r"
            )));
        }
        // clamped so rounding cannot push the core cut past m
        let lower = levels.iter().map(|&a| (l + a * (m - l)).min(m)).collect();
        let upper = levels.iter().map(|&a| (r - a * (r - m)).max(m)).collect();
        Self::new(levels.to_vec(), lower, upper)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Width of the α-cut at grid index k.
    pub fn diam(&self, k: usize) -> f64 {
        self.upper[k] - self.lower[k]
    }

    pub fn is_crisp(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l == u)
            && self.lower.iter().all(|&l| l == self.lower[0])
    }

    /// Ď(u, 0): the largest endpoint magnitude.
    pub fn norm(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFuzzyNumber(msg));
        for k in 0..self.levels.len() {
            let (l, u) = (self.lower[k], self.upper[k]);
            if !l.is_finite() || !u.is_finite() {
                return bad(format!("non-finite endpoint at level {k}"));
            }
            if l > u {
                return bad(format!("lower {l} > upper {u} at level {k}"));
            }
            if k > 0 {
                if self.lower[k] < self.lower[k - 1] {
                    return bad(format!("lower endpoint decreases at level {k}"));
                }
                if self.upper[k] > self.upper[k - 1] {
                    return bad(format!("upper endpoint increases at level {k}"));
                }
            }
        }
        Ok(())
    }

    /// Linear interpolation in α onto another grid.
    pub fn resample(&self, levels: &[f64]) -> Result<Self> {
        validate_levels(levels)?;
        let interp = |ys: &[f64], a: f64| -> f64 {
            let i = match self.levels.partition_point(|&x| x <= a) {
                0 => 0,
                i if i >= self.levels.len() => self.levels.len() - 2,
                i => i - 1,
            };
            let (a0, a1) = (self.levels[i], self.levels[i + 1]);
            let s = (a - a0) / (a1 - a0);
            ys[i] + s * (ys[i + 1] - ys[i])
        };
        let lower = levels.iter().map(|&a| interp(&self.lower, a)).collect();
        let upper = levels.iter().map(|&a| interp(&self.upper, a)).collect();
        Self::new(levels.to_vec(), lower, upper)
    }

    fn aligned<'a>(&self, other: &'a Self, policy: GridPolicy) -> Result<std::borrow::Cow<'a, Self>> {
        if self.levels == other.levels {
            return Ok(std::borrow::Cow::Borrowed(other));
        }
        match policy {
            GridPolicy::Strict => Err(Error::GridMismatch {
                left: self.levels.len(),
                right: other.levels.len(),
            }),
            GridPolicy::Resample => Ok(std::borrow::Cow::Owned(other.resample(&self.levels)?)),
        }
    }

    /// Levelwise interval sum.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_with(other, GridPolicy::Strict)
    }

    pub fn add_with(&self, other: &Self, policy: GridPolicy) -> Result<Self> {
        let o = self.aligned(other, policy)?;
        Ok(FuzzyNumber {
            levels: self.levels.clone(),
            lower: self.lower.iter().zip(&o.lower).map(|(a, b)| a + b).collect(),
            upper: self.upper.iter().zip(&o.upper).map(|(a, b)| a + b).collect(),
        })
    }

    /// c·u; endpoints swap for c < 0.
    pub fn scale(&self, c: f64) -> Self {
        let lo: Vec<f64> = self.lower.iter().map(|x| c * x).collect();
        let up: Vec<f64> = self.upper.iter().map(|x| c * x).collect();
        let (lower, upper) = if c < 0.0 { (up, lo) } else { (lo, up) };
        FuzzyNumber {
            levels: self.levels.clone(),
            lower,
            upper,
        }
    }
}

fn validate_levels(levels: &[f64]) -> Result<()> {
    if levels.len() < 2 {
        return Err(Error::InvalidFuzzyNumber("need at least the levels 0 and 1".into()));
    }
    if levels[0] != 0.0 || levels[levels.len() - 1] != 1.0 {
        return Err(Error::InvalidFuzzyNumber("level grid must start at 0 and end at 1".into()));
    }
    if levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidFuzzyNumber("level grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Hausdorff distance Ď(u, v) = max over levels of the endpoint gaps.
pub fn hausdorff(u: &FuzzyNumber, v: &FuzzyNumber) -> Result<f64> {
    hausdorff_with(u, v, GridPolicy::Strict)
}

pub fn hausdorff_with(u: &FuzzyNumber, v: &FuzzyNumber, policy: GridPolicy) -> Result<f64> {
    let v = u.aligned(v, policy)?;
    let mut d = 0.0f64;
    for k in 0..u.levels.len() {
        d = d
            .max((u.lower[k] - v.lower[k]).abs())
            .max((u.upper[k] - v.upper[k]).abs());
    }
    Ok(d)
}

/// Generalized Hukuhara difference u ⊖gH v. Case (i) is preferred when
/// both branches give a valid fuzzy number.
pub fn gh_diff(u: &FuzzyNumber, v: &FuzzyNumber) -> Result<(FuzzyNumber, GhCase)> {
    let v = u.aligned(v, GridPolicy::Strict)?;
    let dl: Vec<f64> = u.lower.iter().zip(&v.lower).map(|(a, b)| a - b).collect();
    let du: Vec<f64> = u.upper.iter().zip(&v.upper).map(|(a, b)| a - b).collect();
    let first = FuzzyNumber {
        levels: u.levels.clone(),
        lower: dl.clone(),
        upper: du.clone(),
    };
    if first.check().is_ok() {
        return Ok((first, GhCase::First));
    }
    let second = FuzzyNumber {
        levels: u.levels.clone(),
        lower: du,
        upper: dl,
    };
    if second.check().is_ok() {
        return Ok((second, GhCase::Second));
    }
    Err(Error::GhDiffNotExists)
}

/// Norm of a fuzzy vector: the largest Euclidean length of an endpoint
/// vector, over all levels and both sides.
pub fn vector_norm(xs: &[FuzzyNumber]) -> f64 {
    let Some(first) = xs.first() else {
        return 0.0;
    };
    let mut best = 0.0f64;
    for k in 0..first.num_levels() {
        let lo: f64 = xs.iter().map(|x| x.lower[k] * x.lower[k]).sum();
        let up: f64 = xs.iter().map(|x| x.upper[k] * x.upper[k]).sum();
        best = best.max(lo.sqrt()).max(up.sqrt());
    }
    best
}

#[derive(Deserialize)]
#[serde(untagged, deny_unknown_fields)]
enum Repr {
    Full {
        levels: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Triangular {
        triangular: [f64; 3],
    },
    Crisp {
        crisp: f64,
    },
}

impl<'de> Deserialize<'de> for FuzzyNumber {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = match Repr::deserialize(d)? {
            Repr::Full {
                levels,
                lower,
                upper,
            } => FuzzyNumber::new(levels, lower, upper),
            Repr::Triangular { triangular: [l, m, r] } => FuzzyNumber::triangular(l, m, r),
            Repr::Crisp { crisp } => Ok(FuzzyNumber::crisp(crisp)),
        };
        r.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(l: f64, m: f64, r: f64) -> FuzzyNumber {
        FuzzyNumber::triangular(l, m, r).unwrap()
    }

    #[test]
    fn validation() {
        let lv = uniform_levels(2);
        assert!(FuzzyNumber::new(lv.clone(), vec![0.0, 0.5, 1.0], vec![2.0, 1.5, 1.0]).is_ok());
        // not nested
        assert!(FuzzyNumber::new(lv.clone(), vec![0.0, -0.5, 1.0], vec![2.0, 1.5, 1.0]).is_err());
        // lower above upper
        assert!(FuzzyNumber::new(lv.clone(), vec![0.0, 0.5, 1.2], vec![2.0, 1.5, 1.0]).is_err());
        assert!(FuzzyNumber::new(lv.clone(), vec![0.0, f64::NAN, 1.0], vec![2.0, 1.5, 1.0]).is_err());
        assert!(FuzzyNumber::new(vec![0.0, 0.7], vec![0.0; 2], vec![0.0; 2]).is_err());
        assert!(FuzzyNumber::triangular(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn distance_examples() {
        let u = tri(0.0, 1.0, 2.0);
        assert_eq!(hausdorff(&u, &u).unwrap(), 0.0);
        assert_eq!(hausdorff(&FuzzyNumber::crisp(3.0), &FuzzyNumber::crisp(-1.0)).unwrap(), 4.0);
        assert_eq!(hausdorff(&u, &FuzzyNumber::crisp(0.0)).unwrap(), 2.0);
        assert_eq!(u.norm(), 2.0);
    }

    #[test]
    fn grid_mismatch_is_an_error_unless_resampling() {
        let u = tri(0.0, 1.0, 2.0);
        let v = FuzzyNumber::triangular_on(0.0, 1.0, 2.0, &uniform_levels(4)).unwrap();
        assert!(matches!(hausdorff(&u, &v), Err(Error::GridMismatch { left: 11, right: 5 })));
        let d = hausdorff_with(&u, &v, GridPolicy::Resample).unwrap();
        assert!(d < 1e-15);
    }

    #[test]
    fn gh_difference_examples() {
        let u = tri(0.0, 1.0, 2.0);
        let (w, case) = gh_diff(&u, &u).unwrap();
        assert_eq!(case, GhCase::First);
        assert!(w.is_crisp() && w.lower()[0] == 0.0);
        let (w, _) = gh_diff(&FuzzyNumber::crisp(5.0), &FuzzyNumber::crisp(2.0)).unwrap();
        assert_eq!(w, FuzzyNumber::crisp(3.0));
        let (w, case) = gh_diff(&u, &tri(0.0, 0.5, 1.0)).unwrap();
        assert_eq!(case, GhCase::First);
        assert_eq!(w, tri(0.0, 0.5, 1.0));
        // wide minus narrow in the other order needs case (ii)
        let (w, case) = gh_diff(&tri(0.0, 0.5, 1.0), &u).unwrap();
        assert_eq!(case, GhCase::Second);
        assert_eq!(w, tri(-1.0, -0.5, 0.0));
    }

    #[test]
    fn gh_difference_may_not_exist() {
        let lv = uniform_levels(2);
        // widths 2, 1, 0 against widths 1, 1, 1: the difference widths
        // change sign across levels
        let u = FuzzyNumber::new(lv.clone(), vec![0.0, 0.5, 1.0], vec![2.0, 1.5, 1.0]).unwrap();
        let v = FuzzyNumber::new(lv, vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(gh_diff(&u, &v), Err(Error::GhDiffNotExists));
    }

    #[test]
    fn arithmetic_examples() {
        let u = tri(0.0, 1.0, 2.0);
        assert_eq!(u.add(&FuzzyNumber::crisp(0.0)).unwrap(), u);
        assert_eq!(u.scale(-1.0), tri(-2.0, -1.0, 0.0));
        assert_eq!(u.add(&tri(1.0, 1.0, 1.0)).unwrap(), tri(1.0, 2.0, 3.0));
    }

    #[test]
    fn vector_norm_is_euclidean_per_level() {
        let xs = [FuzzyNumber::crisp(3.0), FuzzyNumber::crisp(-4.0)];
        assert_eq!(vector_norm(&xs), 5.0);
        assert_eq!(vector_norm(&[tri(-1.0, 0.0, 2.0)]), 2.0);
    }

    #[test]
    fn serde_forms() {
        let u: FuzzyNumber = serde_json::from_str(r#"{"triangular":[0,1,2]}"#).unwrap();
        assert_eq!(u, tri(0.0, 1.0, 2.0));
        let c: FuzzyNumber = serde_json::from_str(r#"{"crisp":1.5}"#).unwrap();
        assert_eq!(c, FuzzyNumber::crisp(1.5));
        let f: FuzzyNumber =
            serde_json::from_str(r#"{"levels":[0,1],"lower":[0,1],"upper":[2,1]}"#).unwrap();
        assert_eq!(f.upper(), &[2.0, 1.0]);
        let text = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<FuzzyNumber>(&text).unwrap(), f);
        assert!(serde_json::from_str::<FuzzyNumber>(r#"{"triangular":[2,1,0]}"#).is_err());
        assert!(serde_json::from_str::<FuzzyNumber>(r#"{"crisp":1,"extra":2}"#).is_err());
    }
}
