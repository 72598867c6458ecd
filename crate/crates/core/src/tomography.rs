//! Two-qubit state tomography from polarization-projection counts.
//!
//! The standard protocol measures every combination of {H, V, D, R} on the two
//! arms (16 settings). Any superset, such as the 36 combinations of all six
//! axes, is accepted and fitted by least squares.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::linalg::{kron, solve_least_squares, Mat2, Mat4, C64, ZERO};
use crate::metrics::BasisCounts;
use crate::state::{Axis, BellKind, DensityMatrix, Side};
use crate::{Error, Result};

/// The four analyzer axes of the standard protocol.
pub const PROTOCOL_AXES: [Axis; 4] = [Axis::H, Axis::V, Axis::D, Axis::R];

/// The 16 settings `{H, V, D, R}²`.
pub fn standard_settings() -> Vec<(Axis, Axis)> {
    let mut out = Vec::with_capacity(16);
    for a in PROTOCOL_AXES {
        for b in PROTOCOL_AXES {
            out.push((a, b));
        }
    }
    out
}

/// The 36 settings over all six axes.
pub fn overcomplete_settings() -> Vec<(Axis, Axis)> {
    let mut out = Vec::with_capacity(36);
    for a in Axis::ALL {
        for b in Axis::ALL {
            out.push((a, b));
        }
    }
    out
}

/// Projection counts containing at least the 16 standard settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisCounts", into = "BasisCounts")]
pub struct TomographyCounts(BasisCounts);

impl TryFrom<BasisCounts> for TomographyCounts {
    type Error = Error;

    fn try_from(counts: BasisCounts) -> Result<Self> {
        TomographyCounts::new(counts)
    }
}

impl From<TomographyCounts> for BasisCounts {
    fn from(t: TomographyCounts) -> Self {
        t.0
    }
}

impl TomographyCounts {
    pub fn new(counts: BasisCounts) -> Result<Self> {
        counts.require(&standard_settings())?;
        Ok(TomographyCounts(counts))
    }

    pub fn counts(&self) -> &BasisCounts {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().map(|(_, s)| s.counts).sum()
    }

    /// `(setting projector, counts, duration)` for every stored setting.
    fn observations(&self) -> Vec<Observation> {
        self.0
            .iter()
            .map(|(&(a, b), s)| Observation {
                projector: kron(&a.projector(), &b.projector()),
                bloch: (bloch4(a), bloch4(b)),
                counts: s.counts,
                duration: s.duration_s,
            })
            .collect()
    }
}

struct Observation {
    projector: Mat4,
    bloch: ([f64; 4], [f64; 4]),
    counts: f64,
    duration: f64,
}

/// `(1, x, y, z)`: the Pauli expansion `Tr(sigma_mu P)` of an axis projector.
fn bloch4(axis: Axis) -> [f64; 4] {
    let [x, y, z] = axis.bloch();
    [1.0, x, y, z]
}

fn pauli(mu: usize) -> Mat2 {
    let (o, i) = (C64::new(1.0, 0.0), C64::new(0.0, 1.0));
    match mu {
        0 => crate::linalg::Matrix([[o, ZERO], [ZERO, o]]),
        1 => crate::linalg::Matrix([[ZERO, o], [o, ZERO]]),
        2 => crate::linalg::Matrix([[ZERO, -i], [i, ZERO]]),
        _ => crate::linalg::Matrix([[o, ZERO], [ZERO, -o]]),
    }
}

/// Poisson counts with mean `shots * Tr(rho P_a (x) P_b)` on the 16
/// standard settings, each with unit duration.
pub fn simulate_tomography(rho: &DensityMatrix, shots_per_setting: f64, seed: u64) -> Result<TomographyCounts> {
    let counts = simulate_settings(rho, &standard_settings(), shots_per_setting, seed)?;
    TomographyCounts::new(counts)
}

/// [`simulate_tomography`] on an arbitrary list of settings.
pub fn simulate_settings(rho: &DensityMatrix, settings: &[(Axis, Axis)], shots_per_setting: f64, seed: u64) -> Result<BasisCounts> {
    if !(shots_per_setting.is_finite() && shots_per_setting > 0.0) {
        return Err(Error::param("shots_per_setting", "must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = BasisCounts::new();
    for &(a, b) in settings {
        let mean = shots_per_setting * rho.coincidence_probability(a, b);
        let n = if mean > 0.0 {
            Poisson::new(mean)
                .map_err(|_| Error::param("shots_per_setting", "Poisson mean out of range"))?
                .sample(&mut rng)
        } else {
            0.0
        };
        counts.insert(a, b, n, 1.0)?;
    }
    Ok(counts)
}

/// Noise-free counts on the 16 standard settings.
pub fn expected_tomography(rho: &DensityMatrix, shots_per_setting: f64) -> TomographyCounts {
    TomographyCounts(BasisCounts::expected(rho, &standard_settings(), shots_per_setting))
}

/// Unit-trace Hermitian estimate solving the linear relation between the
/// two-qubit Pauli correlations and the measured rates. Not necessarily
/// positive semidefinite.
pub fn linear_inversion(counts: &TomographyCounts) -> Result<Mat4> {
    let obs = counts.observations();
    let mut rows = Vec::with_capacity(obs.len());
    let mut rhs = Vec::with_capacity(obs.len());
    for o in &obs {
        let (sa, sb) = o.bloch;
        let mut row = vec![0.0; 16];
        for mu in 0..4 {
            for nu in 0..4 {
                row[4 * mu + nu] = sa[mu] * sb[nu] / 4.0;
            }
        }
        rows.push(row);
        rhs.push(o.counts / o.duration);
    }
    let x = solve_least_squares(&rows, &rhs)?;
    if !(x[0] > 0.0) {
        return Err(Error::NoCounts);
    }
    let mut m = Mat4::zeros();
    for mu in 0..4 {
        for nu in 0..4 {
            m = m + kron(&pauli(mu), &pauli(nu)).scale(x[4 * mu + nu] / (4.0 * x[0]));
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iter: usize,
    /// Relative log-likelihood change below which the fit has converged.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            max_iter: 10_000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub rho: DensityMatrix,
    /// Poisson log-likelihood `sum n ln mu - mu` (without the `ln n!` constant).
    pub log_likelihood: f64,
    /// Log-likelihood of the positive-projected linear-inversion estimate.
    pub initial_log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub linear_inversion: crate::state::MatrixRecord,
    /// Log-likelihood after every accepted step, starting with the seed.
    pub log_likelihood_history: Vec<f64>,
}

/// Maps the 16 real parameters onto a lower-triangular `T`: four real
/// diagonal entries followed by the six complex entries below the diagonal.
fn unpack(x: &[f64; 16]) -> Mat4 {
    let mut t = Mat4::zeros();
    let mut k = 4;
    for i in 0..4 {
        t.0[i][i] = C64::new(x[i], 0.0);
        for j in 0..i {
            t.0[i][j] = C64::new(x[k], x[k + 1]);
            k += 2;
        }
    }
    t
}

fn pack(t: &Mat4) -> [f64; 16] {
    let mut x = [0.0; 16];
    let mut k = 4;
    for i in 0..4 {
        x[i] = t.0[i][i].re;
        for j in 0..i {
            x[k] = t.0[i][j].re;
            x[k + 1] = t.0[i][j].im;
            k += 2;
        }
    }
    x
}

/// Half the Poisson deviance, `sum mu - n - n ln(mu / n)`, of the
/// unnormalized state `T^dagger T`, and its gradient with respect to the
/// packed parameters. It differs from the negative log-likelihood only by a
/// data-dependent constant and vanishes for a perfect fit.
fn objective(x: &[f64; 16], obs: &[Observation], want_grad: bool) -> (f64, [f64; 16]) {
    let t = unpack(x);
    let m = t.adjoint() * t;
    let mut f = 0.0;
    let mut g = Mat4::zeros();
    for o in obs {
        let mu = o.duration * m.trace_product(&o.projector).re;
        match deviance_term(o.counts, mu) {
            Some(d) => f += d,
            None => return (f64::INFINITY, [0.0; 16]),
        }
        if want_grad {
            let w = if o.counts > 0.0 { o.counts / mu } else { 0.0 } - 1.0;
            g = g + (t * o.projector).scale(w * o.duration);
        }
    }
    let mut grad = [0.0; 16];
    if want_grad {
        // d(-L)/d Re T = -2 Re G, d(-L)/d Im T = -2 Im G.
        let mut k = 4;
        for i in 0..4 {
            grad[i] = -2.0 * g.0[i][i].re;
            for j in 0..i {
                grad[k] = -2.0 * g.0[i][j].re;
                grad[k + 1] = -2.0 * g.0[i][j].im;
                k += 2;
            }
        }
    }
    (f, grad)
}

fn deviance_term(n: f64, mu: f64) -> Option<f64> {
    if n > 0.0 {
        if !(mu > 0.0) {
            return None;
        }
        Some(mu - n - n * (mu / n).ln())
    } else {
        Some(mu.max(0.0))
    }
}

/// `sum n ln n - n`: the log-likelihood of a perfect fit.
fn saturated_log_likelihood(obs: &[Observation]) -> f64 {
    obs.iter().filter(|o| o.counts > 0.0).map(|o| o.counts * o.counts.ln() - o.counts).sum()
}

fn dot(a: &[f64; 16], b: &[f64; 16]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64; 16]) -> f64 {
    dot(a, a).sqrt()
}

/// [`objective`] of a normalized state at its best-fitting scale.
fn state_objective(rho: &DensityMatrix, obs: &[Observation]) -> f64 {
    let expected: f64 = obs.iter().map(|o| o.duration * rho.matrix().trace_product(&o.projector).re).sum();
    let total: f64 = obs.iter().map(|o| o.counts).sum();
    let scale = total / expected;
    let mut f = 0.0;
    for o in obs {
        let mu = scale * o.duration * rho.matrix().trace_product(&o.projector).re;
        match deviance_term(o.counts, mu) {
            Some(d) => f += d,
            None => return f64::INFINITY,
        }
    }
    f
}

/// Lower-triangular `T` with `T^dagger T = m` for positive definite `m`.
fn triangular_factor(m: &Mat4) -> Result<Mat4> {
    // Reversing the basis turns the usual L L^dagger factor into T^dagger T.
    let mut flipped = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            flipped.0[i][j] = m.0[3 - i][3 - j];
        }
    }
    let l = flipped.cholesky()?;
    let mut t = Mat4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            t.0[i][j] = l.0[3 - j][3 - i].conj();
        }
    }
    Ok(t)
}

/// Maximum-likelihood state `T^dagger T / Tr(T^dagger T)` under independent
/// Poisson statistics per setting, found by BFGS from the linear-inversion
/// estimate.
pub fn mle_reconstruct(counts: &TomographyCounts, options: MleOptions) -> Result<MleResult> {
    if counts.total() <= 0.0 {
        return Err(Error::NoCounts);
    }
    let obs = counts.observations();
    let linear = linear_inversion(counts)?;
    let projected = DensityMatrix::project_psd(&linear)?;
    let saturated = saturated_log_likelihood(&obs);
    let initial_log_likelihood = saturated - state_objective(&projected, &obs);

    // Seed slightly inside the cone so every parameter starts active.
    let seed = projected.matrix().scale(0.999) + Mat4::identity().scale(0.001 / 4.0);
    let expected: f64 = obs.iter().map(|o| o.duration * seed.trace_product(&o.projector).re).sum();
    let scale = counts.total() / expected;
    let mut x = pack(&triangular_factor(&seed.scale(scale))?);

    let (mut f, mut g) = objective(&x, &obs, true);
    let mut history = vec![saturated - f];
    let mut h_inv = [[0.0; 16]; 16];
    let first = 0.01 * norm(&x) / norm(&g).max(f64::MIN_POSITIVE);
    for (i, row) in h_inv.iter_mut().enumerate() {
        row[i] = first;
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let mut d = [0.0; 16];
        for i in 0..16 {
            d[i] = -dot(&h_inv[i], &g);
        }
        let mut slope = dot(&d, &g);
        if slope >= 0.0 {
            // Lost descent; restart from steepest descent.
            for (i, row) in h_inv.iter_mut().enumerate() {
                *row = [0.0; 16];
                row[i] = first;
            }
            for i in 0..16 {
                d[i] = -first * g[i];
            }
            slope = dot(&d, &g);
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = x;
            for i in 0..16 {
                trial[i] += alpha * d[i];
            }
            let (ft, _) = objective(&trial, &obs, false);
            if ft <= f + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No decrease representable in floating point: stationary to
            // working precision if the gradient is negligible.
            let scale = f.abs().max(1.0);
            converged = norm(&g) * norm(&x).max(1.0) <= 1e-6 * scale;
            break;
        };
        let (_, g_new) = objective(&x_new, &obs, true);
        let mut s = [0.0; 16];
        let mut y = [0.0; 16];
        for i in 0..16 {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        // Relative to the deviance, which unlike the likelihood itself has
        // no large data-dependent offset.
        let rel_change = (f - f_new).abs() / f.abs().max(1.0);
        let rel_step = norm(&s) / norm(&x).max(1.0);
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(saturated - f);

        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if iterations == 1 {
                let gamma = sy / dot(&y, &y);
                for (i, row) in h_inv.iter_mut().enumerate() {
                    *row = [0.0; 16];
                    row[i] = gamma;
                }
            }
            let mut hy = [0.0; 16];
            for i in 0..16 {
                hy[i] = dot(&h_inv[i], &y);
            }
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..16 {
                for j in 0..16 {
                    h_inv[i][j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }

        if rel_change < options.tol && rel_step < options.tol.sqrt() {
            converged = true;
            break;
        }
    }

    let t = unpack(&x);
    let m = t.adjoint() * t;
    let trace = m.trace().re;
    let rho = DensityMatrix::project_psd(&m.scale(1.0 / trace))?;
    Ok(MleResult {
        rho,
        log_likelihood: saturated - f,
        initial_log_likelihood,
        iterations,
        converged,
        linear_inversion: crate::state::MatrixRecord::from_matrix(&linear),
        log_likelihood_history: history,
    })
}

/// Density-matrix metrics reported for a reconstructed state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QstMetrics {
    pub purity: f64,
    /// Von Neumann entropy in bits.
    pub von_neumann_bits: f64,
    /// Rényi-2 entropy of Alice's reduced state in nats.
    pub renyi2_a: f64,
    /// Rényi-2 entropy of Bob's reduced state in nats.
    pub renyi2_b: f64,
    pub bell_fidelity: f64,
    pub nearest_bell: BellKind,
}

pub fn qst_metrics(rho: &DensityMatrix) -> QstMetrics {
    let (nearest_bell, bell_fidelity) = BellKind::ALL
        .into_iter()
        .map(|k| (k, rho.bell_fidelity(k)))
        .fold((BellKind::PhiPlus, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    QstMetrics {
        purity: rho.purity(),
        von_neumann_bits: rho.von_neumann_entropy(),
        renyi2_a: rho.renyi2_entropy(Side::A),
        renyi2_b: rho.renyi2_entropy(Side::B),
        bell_fidelity,
        nearest_bell,
    }
}

/// Visibility `(p_jj - p_jk) / (p_jj + p_jk)` predicted by a state.
pub fn state_visibility(rho: &DensityMatrix, j: Axis) -> f64 {
    let same = rho.coincidence_probability(j, j);
    let cross = rho.coincidence_probability(j, j.partner());
    if same + cross > 0.0 {
        (same - cross) / (same + cross)
    } else {
        0.0
    }
}
