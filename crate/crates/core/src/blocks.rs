//! Ramp cut-off functions and the building-block decomposition of a
//! normalized wavelet into compactly supported, mean-zero pieces.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::FiniteSpace;
use crate::wavelet::{BasisId, Wavelet};

/// `h(x) = clamp((a0²R0 − d(x,x0)) / (a0²R0 − R0/4), 0, 1)`.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffFunction {
    pub center: usize,
    pub r0: f64,
    pub eta: f64,
    pub values: Vec<f64>,
    /// Smallest `C` with `|h(x) − h(y)| ≤ C·(d(x,y)/R0)^η` over all pairs.
    pub holder_constant: f64,
}

pub fn cutoff(space: &FiniteSpace, x0: usize, r0: f64, eta: f64) -> Result<CutoffFunction> {
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidParameter(format!("cut-off radius {r0} must be positive")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1]")));
    }
    let values = ramp(space, x0, r0);
    let mut holder_constant: f64 = 0.0;
    for x in 0..space.len() {
        for y in (x + 1)..space.len() {
            let jump = (values[x] - values[y]).abs();
            if jump > 0.0 {
                holder_constant = holder_constant.max(jump / (space.d(x, y) / r0).powf(eta));
            }
        }
    }
    Ok(CutoffFunction {
        center: x0,
        r0,
        eta,
        values,
        holder_constant,
    })
}

fn ramp(space: &FiniteSpace, x0: usize, r0: f64) -> Vec<f64> {
    let a2 = space.a0() * space.a0();
    let outer = a2 * r0;
    let width = outer - r0 / 4.0;
    space
        .row(x0)
        .iter()
        .map(|&d| ((outer - d) / width).clamp(0.0, 1.0))
        .collect()
}

/// Pieces `φ_ℓ` with `Σ_ℓ (cbar·2^ℓ)^{−γ} φ_ℓ = ψ̃ = ψ/√μ(B(y, δ^k))`.
#[derive(Debug, Clone, Serialize)]
pub struct BuildingBlockSet {
    pub wavelet: BasisId,
    pub center: usize,
    pub scale: f64,
    pub gamma: f64,
    pub cbar: f64,
    pub eta: f64,
    /// `√μ(B(y, δ^k))`, the factor dividing `ψ` in `ψ̃`.
    pub normalization: f64,
    /// Last block index `L`: `h_L ≡ 1` on the wavelet support.
    pub horizon: usize,
    /// `R_ℓ = cbar·2^ℓ·δ^k`.
    pub radii: Vec<f64>,
    pub normalized: Vec<f64>,
    pub cutoffs: Vec<Vec<f64>>,
    pub lambdas: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub s: Vec<f64>,
    pub xi: Vec<Vec<f64>>,
    pub blocks: Vec<Vec<f64>>,
    /// Measured boundedness constant over all blocks and points.
    pub boundedness_constant: f64,
    /// Measured Hölder constant over pairs at distance `≤ δ^k`.
    pub holder_constant: f64,
}

impl BuildingBlockSet {
    /// `(cbar·2^ℓ)^{−γ}`.
    pub fn weight(&self, ell: usize) -> f64 {
        (self.cbar * 2f64.powi(ell as i32)).powf(-self.gamma)
    }

    /// Block `ℓ`, or `None` beyond the horizon where blocks vanish.
    pub fn block(&self, ell: usize) -> Option<&[f64]> {
        self.blocks.get(ell).map(Vec::as_slice)
    }
}

pub fn building_blocks(
    space: &FiniteSpace,
    wavelet: &Wavelet,
    gamma: f64,
    cbar: f64,
    eta: f64,
) -> Result<BuildingBlockSet> {
    if gamma <= space.omega() {
        return Err(Error::InvalidParameter(format!(
            "gamma = {gamma} must exceed the upper dimension omega = {}",
            space.omega()
        )));
    }
    if !(cbar > 1.0 && cbar.is_finite()) {
        return Err(Error::InvalidParameter(format!("cbar = {cbar} must exceed 1")));
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::InvalidParameter(format!("eta = {eta} must lie in (0, 1]")));
    }
    let n = space.len();
    let y = wavelet.center;
    let scale = wavelet.scale;
    let weights = space.weights();
    let integral = |f: &[f64]| -> f64 { f.iter().zip(weights).map(|(v, w)| v * w).sum() };

    let normalization = space.ball_measure(y, scale).sqrt();
    let normalized: Vec<f64> = wavelet.values.iter().map(|v| v / normalization).collect();

    let reach = wavelet
        .support
        .iter()
        .map(|&x| space.d(y, x))
        .fold(0.0, f64::max);
    let mut horizon = 0usize;
    while cbar * 2f64.powi(horizon as i32) * scale / 4.0 < reach {
        horizon += 1;
    }

    let radii: Vec<f64> = (0..=horizon)
        .map(|l| cbar * 2f64.powi(l as i32) * scale)
        .collect();
    let cutoffs: Vec<Vec<f64>> = radii.iter().map(|&r| ramp(space, y, r)).collect();
    let lambdas: Vec<Vec<f64>> = (0..=horizon)
        .map(|l| {
            (0..n)
                .map(|x| {
                    let h_prev = if l == 0 { 0.0 } else { cutoffs[l - 1][x] };
                    (cutoffs[l][x] - h_prev) * normalized[x]
                })
                .collect()
        })
        .collect();
    let a: Vec<f64> = lambdas.iter().map(|f| integral(f)).collect();
    let mut s: Vec<f64> = a
        .iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect();
    // The full sum is ∫ψ̃ = 0; pin it so the telescoping closes exactly.
    s[horizon] = 0.0;
    let xi: Vec<Vec<f64>> = cutoffs
        .iter()
        .map(|h| {
            let mass = integral(h);
            h.iter().map(|v| v / mass).collect()
        })
        .collect();

    let mut blocks = Vec::with_capacity(horizon + 1);
    for l in 0..=horizon {
        let factor = (cbar * 2f64.powi(l as i32)).powf(gamma);
        let block: Vec<f64> = (0..n)
            .map(|x| {
                let mut v = lambdas[l][x];
                if l > 0 {
                    v += s[l - 1] * xi[l][x];
                }
                if l < horizon {
                    v -= s[l] * xi[l + 1][x];
                }
                factor * v
            })
            .collect();
        blocks.push(block);
    }

    let omega = space.omega();
    let mut boundedness_constant: f64 = 0.0;
    let mut holder_constant: f64 = 0.0;
    for (l, block) in blocks.iter().enumerate() {
        let dil = (cbar * 2f64.powi(l as i32)).powf(omega);
        let mass = space.ball_measure(y, radii[l]);
        for x in 0..n {
            boundedness_constant = boundedness_constant.max(block[x].abs() * mass / dil);
            for z in (x + 1)..n {
                let d = space.d(x, z);
                if d <= scale {
                    let jump = (block[x] - block[z]).abs();
                    if jump > 0.0 {
                        let bound = radii[l].powf(-eta) * dil * d.powf(eta) / mass;
                        holder_constant = holder_constant.max(jump / bound);
                    }
                }
            }
        }
    }

    Ok(BuildingBlockSet {
        wavelet: wavelet.id(),
        center: y,
        scale,
        gamma,
        cbar,
        eta,
        normalization,
        horizon,
        radii,
        normalized,
        cutoffs,
        lambdas,
        a,
        s,
        xi,
        blocks,
        boundedness_constant,
        holder_constant,
    })
}
