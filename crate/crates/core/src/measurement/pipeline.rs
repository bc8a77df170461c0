use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::pmatrix::{p_matrix_integral, p_matrix_series_from, PMatrixMaps};
use super::probe::Statistics;
use super::vibronic::VibronicState;
use super::wigner::{moment_set_from_cf, DisplacedDiagonals, FdOptions, MomentErrors, WignerMatrixGrid, WignerMatrixSample};
use crate::criteria::CriteriaResult;
use crate::error::{Error, Result};
use crate::fock::MomentSet;
use crate::phasespace::{FilterSpec, Method, PhaseGrid, DEFAULT_WIDTH};

/// Default half-extent of the α-grid on which the Wigner matrix is sampled.
pub const DEFAULT_ALPHA_HALF_EXTENT: f64 = 6.5;
/// Default α-grid spacing.
pub const DEFAULT_ALPHA_SPACING: f64 = 0.25;
/// Settings of the reconstruction pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub alpha_grid: PhaseGrid,
    pub fd: FdOptions,
    pub statistics: Statistics,
    /// Grid for the P-matrix; `None` skips it.
    pub p_grid: Option<PhaseGrid>,
    pub width: f64,
    pub method: Method,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha_grid: PhaseGrid::with_spacing(C64::new(0.0, 0.0), DEFAULT_ALPHA_HALF_EXTENT, DEFAULT_ALPHA_SPACING)
                .expect("default grid is valid"),
            fd: FdOptions::default(),
            statistics: Statistics::Ideal,
            p_grid: None,
            width: DEFAULT_WIDTH,
            method: Method::Series,
        }
    }
}

/// Reconstruction results.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub wigner: WignerMatrixGrid,
    pub moments: MomentSet,
    /// Finite-difference error estimates in ideal mode, shot-noise standard
    /// errors in shot-noise mode.
    pub moment_errors: MomentErrors,
    pub criteria: CriteriaResult,
    pub p_matrix: Option<PMatrixMaps>,
    pub statistics: Statistics,
}

/// Multinomial resampling of the populations `ρ_11^{nn}`, `ρ_22^{nn}` with
/// `shots` draws, preserving their total weight.
fn sample_populations(d: &mut DisplacedDiagonals, shots: u64, rng: &mut ChaCha8Rng) -> Result<()> {
    let weights: Vec<f64> = d.blocks[0][0].iter().chain(d.blocks[1][1].iter()).map(|z| z.re.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Ok(());
    }
    let mut remaining = shots;
    let mut rest = 1.0;
    let mut counts = Vec::with_capacity(weights.len());
    for w in &weights {
        let p = w / total;
        let k = if remaining == 0 || rest <= 0.0 {
            0
        } else {
            let q = (p / rest).clamp(0.0, 1.0);
            Binomial::new(remaining, q).map_err(|e| Error::InvalidParameter(e.to_string()))?.sample(rng)
        };
        counts.push(k);
        remaining -= k;
        rest -= p;
    }
    let n1 = d.blocks[0][0].len();
    for (idx, k) in counts.into_iter().enumerate() {
        let v = C64::new(k as f64 / shots as f64 * total, 0.0);
        if idx < n1 {
            d.blocks[0][0][idx] = v;
        } else {
            d.blocks[1][1][idx - n1] = v;
        }
    }
    Ok(())
}

fn diagonals_on(state: &VibronicState, grid: &PhaseGrid) -> Result<Vec<DisplacedDiagonals>> {
    let n = grid.n_side();
    let mut out = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            out.push(DisplacedDiagonals::compute(state, grid.point(r, c))?);
        }
    }
    Ok(out)
}

fn noisy(base: &[DisplacedDiagonals], shots: u64, seed: u64, stream0: u64) -> Result<Vec<DisplacedDiagonals>> {
    let mut out = base.to_vec();
    for (k, d) in out.iter_mut().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream0 + k as u64);
        sample_populations(d, shots, &mut rng)?;
    }
    Ok(out)
}

fn wigner_of(grid: &PhaseGrid, diags: &[DisplacedDiagonals]) -> Result<WignerMatrixGrid> {
    let samples: Vec<WignerMatrixSample> = diags.iter().map(|d| d.wigner()).collect();
    WignerMatrixGrid::from_samples(*grid, &samples)
}

/// Simulated reconstruction: displaced diagonal elements on the α-grid,
/// Wigner-function matrix, characteristic function by Fourier quadrature,
/// moments by finite differences at `β = 0`, and optionally the P-matrix.
///
/// In ideal mode the diagonal elements are the exact displaced values, which
/// is what a well-conditioned probe inversion returns. In shot-noise mode each
/// α-point's level-resolved populations are replaced by multinomial
/// frequencies; this requires a state without electronic coherence. Point `k`
/// draws from ChaCha stream `k` of `seed` (P-grid points continue after the
/// α-grid). The moments are linear in the sampled populations, so their
/// standard errors follow exactly from the multinomial covariances.
pub fn run_pipeline(state: &VibronicState, t: f64, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    state.validate()?;
    cfg.fd.validate()?;
    let base = diagonals_on(state, &cfg.alpha_grid)?;
    let n_alpha = base.len() as u64;
    let p_base = match &cfg.p_grid {
        Some(g) if cfg.method == Method::Series => Some(diagonals_on(state, g)?),
        _ => None,
    };

    let (diags, p_diags, errors) = match cfg.statistics {
        Statistics::Ideal => (base, p_base, None),
        Statistics::Shots { shots, seed } => {
            if shots == 0 {
                return Err(Error::InvalidParameter("shot budget must be positive".into()));
            }
            if !state.is_electronically_diagonal(1e-14) {
                return Err(Error::InvalidParameter("shot-noise reconstruction needs a state without electronic coherence".into()));
            }
            let errors = shot_noise_errors(&base, &cfg.alpha_grid, &cfg.fd, shots)?;
            let diags = noisy(&base, shots, seed, 0)?;
            let p_diags = match p_base {
                Some(pb) => Some(noisy(&pb, shots, seed, n_alpha)?),
                None => None,
            };
            (diags, p_diags, Some(errors))
        }
    };
    let wigner = wigner_of(&cfg.alpha_grid, &diags)?;
    let (moments, fd_errors) = moment_set_from_cf(&|b| wigner.traced_cf(b), &cfg.fd)?;

    let p_matrix = match (&cfg.p_grid, cfg.method) {
        (None, _) => None,
        (Some(g), Method::Series) => Some(p_matrix_series_from(g, cfg.width, p_diags.as_deref().unwrap_or(&[]))?),
        (Some(g), Method::Integral) => Some(p_matrix_integral(&wigner, g, &FilterSpec::disc(cfg.width)?)?),
    };

    Ok(PipelineOutput {
        wigner,
        moments,
        moment_errors: errors.unwrap_or(fd_errors),
        criteria: CriteriaResult::from_moments(t, moments),
        p_matrix,
        statistics: cfg.statistics,
    })
}

/// Standard errors of the moments under multinomial sampling with `shots`
/// draws per α-point. A moment is `Σ_k g_k W(α_k)`, where `g_k` is the
/// finite-difference functional applied to the characteristic function of
/// a unit Wigner sample at `α_k`. With `W(α_k) = (2/π) S_k Σ_{i,n} (−1)^n q_{i,n}`
/// and frequencies `q` of total weight `S_k`, the variance of `W(α_k)` is
/// `(2/π)² S_k² (1 − M_k²)/shots` with `M_k = Σ (−1)^n q_{i,n}`.
fn shot_noise_errors(base: &[DisplacedDiagonals], grid: &PhaseGrid, fd: &FdOptions, shots: u64) -> Result<MomentErrors> {
    let h2 = grid.spacing() * grid.spacing();
    let mut var = [0.0f64; 5];
    for d in base {
        let mut total = 0.0;
        let mut signed = 0.0;
        for blk in [&d.blocks[0][0], &d.blocks[1][1]] {
            for (n, z) in blk.iter().enumerate() {
                let w = z.re.max(0.0);
                total += w;
                signed += if n % 2 == 0 { w } else { -w };
            }
        }
        if total <= 0.0 {
            continue;
        }
        let m = signed / total;
        let var_w = (2.0 / PI).powi(2) * total * total * (1.0 - m * m).max(0.0) / shots as f64;
        let alpha = d.alpha;
        let unit = |beta: C64| -> Result<C64> {
            let phase = beta * alpha.conj() - beta.conj() * alpha;
            Ok(phase.exp() * (0.5 * beta.norm_sqr()).exp() * h2)
        };
        let (g, _) = moment_set_from_cf(&unit, fd)?;
        var[0] += g.mean_a.norm_sqr() * var_w;
        var[1] += g.mean_a2.norm_sqr() * var_w;
        var[2] += g.mean_n * g.mean_n * var_w;
        var[3] += g.mean_na.norm_sqr() * var_w;
        var[4] += g.mean_n2 * g.mean_n2 * var_w;
    }
    Ok(MomentErrors { mean_a: var[0].sqrt(), mean_a2: var[1].sqrt(), mean_n: var[2].sqrt(), mean_na: var[3].sqrt(), mean_n2: var[4].sqrt() })
}
