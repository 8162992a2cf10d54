//! Fractional Adams–Bashforth–Moulton PECE on a uniform grid.
//!
//! Solves x(t) = x0(t) + I^q f(t, x) where I^q is the Riemann–Liouville
//! integral and x0 is constant (plus an optional per-node forcing term).
//! The product-rectangle predictor and product-trapezoid corrector are
//! augmented with starting correction weights that make both rules exact
//! for f ∝ t^γ, γ in a small exponent set. Without them the t^q behaviour
//! of solutions near 0 caps the max-norm order at about 1.
//!
//! Nodes 1..=s that carry correction weights are solved together by a
//! Newton iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::special::{gamma, rgamma};

/// Right-hand side evaluated at node `n`. `states` holds nodes `0..=n`
/// (node-major, `dim` values each); the last one is the value to evaluate at.
pub(crate) trait Rhs {
    fn eval(&self, n: usize, t: f64, states: &[f64], out: &mut [f64]) -> Result<()>;
}

impl<F> Rhs for F
where
    F: Fn(usize, f64, &[f64], &mut [f64]) -> Result<()>,
{
    fn eval(&self, n: usize, t: f64, states: &[f64], out: &mut [f64]) -> Result<()> {
        self(n, t, states, out)
    }
}

/// Exponents γ for which the starting weights make the rules exact.
fn correction_exponents(q: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    for j in 1..=3 {
        let e = j as f64 * q;
        if e < 1.0 - 1e-9 {
            g.push(e);
        }
    }
    g.push(1.0);
    g
}

/// Quadrature weights shared by every solve with the same (q, N).
pub(crate) struct Weights {
    q: f64,
    /// k^q for k = 0..=N+1
    pq: Vec<f64>,
    /// k^{q+1}
    pq1: Vec<f64>,
    g1: f64,
    g2: f64,
    m: usize,
    /// Corrector correction weights for node n, `m` per node.
    wc: Vec<f64>,
    /// Predictor correction weights for node n.
    wp: Vec<f64>,
}

impl Weights {
    pub(crate) fn new(q: f64, n_steps: usize) -> Result<Self> {
        let pq: Vec<f64> = (0..=n_steps + 1).map(|k| (k as f64).powf(q)).collect();
        let pq1: Vec<f64> = (0..=n_steps + 1).map(|k| (k as f64).powf(q + 1.0)).collect();
        let g1 = rgamma(q + 1.0);
        let g2 = rgamma(q + 2.0);
        let exps = correction_exponents(q);
        let m = exps.len();
        let mut w = Weights {
            q,
            pq,
            pq1,
            g1,
            g2,
            m,
            wc: vec![0.0; (n_steps + 1) * m],
            wp: vec![0.0; (n_steps + 1) * m],
        };
        // K[γ][k] = k^γ with 0^0 = 1
        let k_mat = DMatrix::from_fn(m, m, |i, k| {
            if k == 0 {
                if exps[i] == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (k as f64).powf(exps[i])
            }
        });
        // The predictor only needs exactness below 1 − q: for larger γ its
        // error is already O(h^{1+q}) after the corrector, and forcing
        // exactness there makes the weights grow with n.
        let mp = exps
            .iter()
            .take_while(|&&g| g == 0.0 || g < 1.0 - q - 1e-9)
            .count();
        let lu_p = k_mat.view((0, 0), (mp, mp)).into_owned().lu();
        let lu = k_mat.lu();
        // f_j = j^γ on the whole grid, per exponent
        let powers: Vec<Vec<f64>> = exps
            .iter()
            .map(|&g| {
                (0..=n_steps)
                    .map(|j| if j == 0 { if g == 0.0 { 1.0 } else { 0.0 } } else { (j as f64).powf(g) })
                    .collect()
            })
            .collect();
        let exact_coef: Vec<f64> = exps.iter().map(|&g| gamma(g + 1.0) * rgamma(g + 1.0 + q)).collect();
        let mut rc = DVector::zeros(m);
        let mut rp = DVector::zeros(mp);
        for n in 1..=n_steps {
            for (i, &g) in exps.iter().enumerate() {
                let f = &powers[i];
                let exact = exact_coef[i] * (n as f64).powf(g + q);
                let (pred, corr) = w.base_sums(n, |j| f[j], f[n]);
                rc[i] = exact - corr;
                if i < mp {
                    rp[i] = exact - pred;
                }
            }
            let sc = lu
                .solve(&rc)
                .ok_or(Error::IllConditioned(f64::INFINITY))?;
            let sp = lu_p
                .solve(&rp)
                .ok_or(Error::IllConditioned(f64::INFINITY))?;
            w.wc[n * m..(n + 1) * m].copy_from_slice(sc.as_slice());
            w.wp[n * m..n * m + mp].copy_from_slice(sp.as_slice());
        }
        Ok(w)
    }

    /// Predictor coefficient of F_j for node n (j < n), unit step.
    #[inline]
    fn b(&self, n: usize, j: usize) -> f64 {
        self.pq[n - j] - self.pq[n - 1 - j]
    }

    /// Corrector coefficient of F_j for node n (j < n), unit step.
    #[inline]
    fn a(&self, n: usize, j: usize) -> f64 {
        let nn = n - 1;
        if j == 0 {
            self.pq1[nn] - (nn as f64 - self.q) * self.pq[nn + 1]
        } else {
            self.pq1[nn - j + 2] + self.pq1[nn - j] - 2.0 * self.pq1[nn - j + 1]
        }
    }

    /// Unit-step predictor and corrector sums of a scalar sequence.
    fn base_sums(&self, n: usize, f: impl Fn(usize) -> f64, fn_: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut c = 0.0;
        for j in 0..n {
            let fj = f(j);
            p += self.b(n, j) * fj;
            c += self.a(n, j) * fj;
        }
        (self.g1 * p, self.g2 * (c + fn_))
    }

    pub(crate) fn start_len(&self) -> usize {
        self.m - 1
    }
}

/// Accepted-state hook: may repair `x` in place or reject it.
pub(crate) trait Accept {
    fn accept(&self, n: usize, t: f64, x: &mut [f64]) -> Result<()>;
}

impl<F> Accept for F
where
    F: Fn(usize, f64, &mut [f64]) -> Result<()>,
{
    fn accept(&self, n: usize, t: f64, x: &mut [f64]) -> Result<()> {
        self(n, t, x)
    }
}

pub(crate) struct Problem<'a> {
    pub q: f64,
    pub h: f64,
    pub n_steps: usize,
    pub x0: &'a [f64],
    /// Optional additive term per node (node-major), e.g. a stochastic
    /// convolution. Node 0 must be zero.
    pub forcing: Option<&'a [f64]>,
}

/// Work counters, reported instead of wall-clock time.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WorkStats {
    pub rhs_evals: u64,
    pub newton_iters: u64,
}

/// Run the PECE scheme; returns node-major states for nodes 0..=N.
pub(crate) fn solve(
    p: &Problem<'_>,
    w: &Weights,
    rhs: &impl Rhs,
    accept: &impl Accept,
    stats: &mut WorkStats,
) -> Result<Vec<f64>> {
    let d = p.x0.len();
    let n_total = p.n_steps;
    let hq = p.h.powf(p.q);
    let m = w.m;
    let mut x = vec![0.0; (n_total + 1) * d];
    let mut f = vec![0.0; (n_total + 1) * d];
    x[..d].copy_from_slice(p.x0);
    let mut x0buf = p.x0.to_vec();
    accept.accept(0, 0.0, &mut x0buf)?;
    x[..d].copy_from_slice(&x0buf);
    let x0 = x0buf;
    {
        let (head, _) = f.split_at_mut(d);
        rhs.eval(0, 0.0, &x[..d], head)?;
        stats.rhs_evals += 1;
    }
    check_finite(&f[..d], 0.0)?;
    let forcing = |n: usize, i: usize| p.forcing.map_or(0.0, |fr| fr[n * d + i]);

    let s = w.start_len().min(n_total);
    if s > 0 {
        start_block(p, w, rhs, accept, &x0, hq, s, &mut x, &mut f, stats)?;
    }

    let mut acc_p = vec![0.0; d];
    let mut acc_c = vec![0.0; d];
    let mut fp = vec![0.0; d];
    for n in s..n_total {
        let node = n + 1;
        let t = node as f64 * p.h;
        acc_p.iter_mut().for_each(|v| *v = 0.0);
        acc_c.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..node {
            let bj = w.b(node, j);
            let aj = w.a(node, j);
            let fj = &f[j * d..(j + 1) * d];
            for i in 0..d {
                acc_p[i] += bj * fj[i];
                acc_c[i] += aj * fj[i];
            }
        }
        let wp = &w.wp[node * m..(node + 1) * m];
        let wc = &w.wc[node * m..(node + 1) * m];
        for i in 0..d {
            let mut cp = 0.0;
            let mut cc = 0.0;
            for k in 0..m {
                cp += wp[k] * f[k * d + i];
                cc += wc[k] * f[k * d + i];
            }
            acc_p[i] = w.g1 * acc_p[i] + cp;
            acc_c[i] = w.g2 * acc_c[i] + cc;
        }
        // predict
        for i in 0..d {
            x[node * d + i] = x0[i] + forcing(node, i) + hq * acc_p[i];
        }
        rhs.eval(node, t, &x[..(node + 1) * d], &mut fp)?;
        stats.rhs_evals += 1;
        check_finite(&fp, t)?;
        // correct
        for i in 0..d {
            x[node * d + i] = x0[i] + forcing(node, i) + hq * (acc_c[i] + w.g2 * fp[i]);
        }
        accept.accept(node, t, &mut x[node * d..(node + 1) * d])?;
        check_finite(&x[node * d..(node + 1) * d], t)?;
        let (done, rest) = f.split_at_mut(node * d);
        let _ = done;
        rhs.eval(node, t, &x[..(node + 1) * d], &mut rest[..d])?;
        stats.rhs_evals += 1;
        check_finite(&rest[..d], t)?;
    }
    Ok(x)
}

fn check_finite(v: &[f64], t: f64) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Solve nodes 1..=s jointly: x_k = x0 + forcing_k + h^q (corrector sum).
#[allow(clippy::too_many_arguments)]
fn start_block(
    p: &Problem<'_>,
    w: &Weights,
    rhs: &impl Rhs,
    accept: &impl Accept,
    x0: &[f64],
    hq: f64,
    s: usize,
    x: &mut [f64],
    f: &mut [f64],
    stats: &mut WorkStats,
) -> Result<()> {
    let d = x0.len();
    let m = w.m;
    // coefficient of F_j in node k's corrector, k = 1..=s, j = 0..=s
    let mut coef = vec![vec![0.0; s + 1]; s + 1];
    #[allow(clippy::needless_range_loop)]
    for k in 1..=s {
        for j in 0..k {
            coef[k][j] = w.g2 * w.a(k, j);
        }
        coef[k][k] += w.g2;
        for (j, c) in w.wc[k * m..(k + 1) * m].iter().enumerate() {
            if j <= s {
                coef[k][j] += c;
            }
        }
    }
    let forcing = |n: usize, i: usize| p.forcing.map_or(0.0, |fr| fr[n * d + i]);
    // initial guess: constant continuation
    for k in 1..=s {
        for i in 0..d {
            x[k * d + i] = x0[i] + forcing(k, i);
        }
    }
    let dim = s * d;
    let eval_all = |x: &[f64], f: &mut [f64], stats: &mut WorkStats| -> Result<()> {
        for k in 1..=s {
            let t = k as f64 * p.h;
            let (_, rest) = f.split_at_mut(k * d);
            rhs.eval(k, t, &x[..(k + 1) * d], &mut rest[..d])?;
            stats.rhs_evals += 1;
            check_finite(&rest[..d], t)?;
        }
        Ok(())
    };
    let residual = |x: &[f64], f: &[f64], r: &mut DVector<f64>| {
        for k in 1..=s {
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..=s {
                    acc += coef[k][j] * f[j * d + i];
                }
                r[(k - 1) * d + i] = x[k * d + i] - (x0[i] + forcing(k, i) + hq * acc);
            }
        }
    };
    let mut r = DVector::zeros(dim);
    let mut fbuf = vec![0.0; d];
    let mut converged = false;
    for _ in 0..60 {
        stats.newton_iters += 1;
        eval_all(x, f, stats)?;
        residual(x, f, &mut r);
        let scale = x[d..(s + 1) * d].iter().fold(1e-300f64, |a, v| a.max(v.abs()));
        // per-node Jacobian of f by forward differences; cross-node terms of
        // delayed arguments are ignored (inexact Newton)
        let mut jac = DMatrix::<f64>::identity(dim, dim);
        for k in 1..=s {
            let t = k as f64 * p.h;
            for c in 0..d {
                let idx = k * d + c;
                let orig = x[idx];
                let step = 1e-7 * orig.abs().max(1e-3 * scale).max(1e-12);
                x[idx] = orig + step;
                rhs.eval(k, t, &x[..(k + 1) * d], &mut fbuf)?;
                stats.rhs_evals += 1;
                x[idx] = orig;
                for row_k in 1..=s {
                    let ck = coef[row_k][k];
                    if ck == 0.0 {
                        continue;
                    }
                    for i in 0..d {
                        let df = (fbuf[i] - f[k * d + i]) / step;
                        jac[((row_k - 1) * d + i, (k - 1) * d + c)] -= hq * ck * df;
                    }
                }
            }
        }
        let delta = jac
            .lu()
            .solve(&r)
            .ok_or(Error::NonFinite { t: p.h })?;
        let mut max_step = 0.0f64;
        for k in 1..=s {
            for i in 0..d {
                let dv = delta[(k - 1) * d + i];
                x[k * d + i] -= dv;
                max_step = max_step.max(dv.abs());
            }
        }
        check_finite(&x[d..(s + 1) * d], p.h)?;
        if max_step <= 1e-15 * scale {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonFinite { t: s as f64 * p.h });
    }
    for k in 1..=s {
        let t = k as f64 * p.h;
        accept.accept(k, t, &mut x[k * d..(k + 1) * d])?;
    }
    eval_all(x, f, stats)?;
    Ok(())
}
