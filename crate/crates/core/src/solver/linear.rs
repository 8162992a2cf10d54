//! Closed-form reference solution of D^q x = A x for diagonalizable A with
//! real spectrum: x(t) = V diag(E_q(λ_i t^q)) V⁻¹ x(0), applied to every
//! endpoint vector.

use nalgebra::{DMatrix, DVector};

use super::{FuzzyTrajectory, Lanes, WorkStats};
use crate::error::{Error, Result};
use crate::fuzzy::FuzzyNumber;
use crate::mlf::ml_one;

const MAX_CONDITION: f64 = 1e8;

/// Eigenvalues and an eigenbasis (columns of V) of A.
fn eigenbasis(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let eig = a
        .clone()
        .schur()
        .eigenvalues()
        .ok_or_else(|| Error::UnsupportedMatrix("spectrum is not real".into()))?;
    let mut vals: Vec<f64> = eig.iter().copied().collect();
    vals.sort_by(|x, y| x.total_cmp(y));
    // cluster repeated eigenvalues
    let radius = vals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-6 * radius;
    let null_tol = 1e-8 * a.norm().max(1.0);
    let mut groups: Vec<(f64, usize)> = Vec::new();
    for v in vals {
        match groups.last_mut() {
            Some((c, k)) if (v - *c).abs() <= tol => {
                *c = (*c * *k as f64 + v) / (*k as f64 + 1.0);
                *k += 1;
            }
            _ => groups.push((v, 1)),
        }
    }
    let mut lambdas = Vec::with_capacity(n);
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for (lam, mult) in groups {
        let shifted = a - DMatrix::identity(n, n) * lam;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::UnsupportedMatrix("SVD failed".into()))?;
        let null: Vec<usize> = (0..n).filter(|&i| svd.singular_values[i] <= null_tol).collect();
        if null.len() != mult {
            return Err(Error::UnsupportedMatrix(format!(
                "not diagonalizable: eigenvalue {lam} has multiplicity {mult} but {} eigenvectors",
                null.len()
            )));
        }
        for i in null {
            lambdas.push(lam);
            cols.push(v_t.row(i).transpose());
        }
    }
    Ok((lambdas, DMatrix::from_columns(&cols)))
}

/// Exact levelwise solution at the given times.
pub fn exact_linear(a: &DMatrix<f64>, u0: &[FuzzyNumber], q: f64, times: &[f64]) -> Result<FuzzyTrajectory> {
    let n = a.nrows();
    if a.ncols() != n || n == 0 {
        return Err(Error::UnsupportedMatrix("matrix must be square and non-empty".into()));
    }
    if u0.len() != n {
        return Err(Error::arg("initial", format!("{} components for a {n}x{n} matrix", u0.len())));
    }
    if u0.iter().any(|u| u.levels() != u0[0].levels()) {
        return Err(Error::GridMismatch {
            left: u0[0].num_levels(),
            right: u0.iter().map(|u| u.num_levels()).find(|&k| k != u0[0].num_levels()).unwrap_or(0),
        });
    }
    let (lambdas, v) = eigenbasis(a)?;
    let sv = v.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let v_inv = v
        .clone()
        .try_inverse()
        .ok_or(Error::IllConditioned(f64::INFINITY))?;
    let lanes = Lanes::new(u0);
    let count = lanes.count();
    // modal coordinates of every distinct lane
    let modal: Vec<DVector<f64>> = (0..count)
        .map(|l| &v_inv * DVector::from_column_slice(&lanes.x0[l * n..(l + 1) * n]))
        .collect();
    let mut data = Vec::new();
    let mut norm = Vec::with_capacity(times.len());
    let mut x = vec![0.0; count * n];
    for &t in times {
        let e: Vec<f64> = lambdas
            .iter()
            .map(|&lam| if t == 0.0 { Ok(1.0) } else { ml_one(q, lam * t.powf(q)) })
            .collect::<Result<_>>()?;
        for (l, z) in modal.iter().enumerate() {
            let scaled = DVector::from_iterator(n, z.iter().zip(&e).map(|(zi, ei)| zi * ei));
            let y = &v * scaled;
            x[l * n..(l + 1) * n].copy_from_slice(y.as_slice());
        }
        if t == 0.0 {
            x.copy_from_slice(&lanes.x0);
        }
        lanes.expand(&x, &mut data);
        norm.push(lanes.norm(&x));
    }
    Ok(FuzzyTrajectory {
        q,
        times: times.to_vec(),
        levels: u0[0].levels().to_vec(),
        dim: n,
        data,
        norm,
        history_len: 0,
        warnings: Vec::new(),
        stats: WorkStats::default(),
    })
}
