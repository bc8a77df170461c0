use std::f64::consts::FRAC_PI_2;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::vibronic::{displace_vibronic, VibronicState, LEVEL_1, LEVEL_2};
use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::fock::{laguerre_sequence, Truncation};
use crate::linalg;

/// Largest accepted condition number of a probe design matrix.
pub const COND_LIMIT: f64 = 1e8;

/// Default ladder step for the level-2 design.
pub const LEVEL2_TAU0: f64 = 2.5;
/// Default ladder step for the full design.
pub const FULL_TAU0: f64 = 2.9;

/// Carrier mode function `f_0(n) = cos(Δφ) e^{−η²/2} L_n(η²)` for `n < dim`.
pub fn probe_mode_function(params: &ModelParams, dim: usize) -> Vec<f64> {
    let x = params.eta * params.eta;
    let pre = params.delta_phi.cos() * (-0.5 * x).exp();
    laguerre_sequence(dim, 0, x).into_iter().map(|l| pre * l).collect()
}

/// Probe rotation on `span{|1,n⟩, |2,n⟩}` with mixing angle `θ_n`.
///
/// With laser phase `χ` the propagator is `cosθ` on the diagonal,
/// `⟨1|U|2⟩ = −i e^{iχ} sinθ` and `⟨2|U|1⟩ = −i e^{−iχ} sinθ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeRotation {
    pub theta: f64,
}

impl ProbeRotation {
    /// Rows and columns ordered (|1⟩, |2⟩).
    pub fn matrix(&self, chi: f64) -> [[C64; 2]; 2] {
        let (s, c) = self.theta.sin_cos();
        let mi = C64::new(0.0, -1.0);
        [[C64::new(c, 0.0), mi * C64::from_polar(s, chi)], [mi * C64::from_polar(s, -chi), C64::new(c, 0.0)]]
    }
}

/// Rotation table `θ_n = |κ'| f_0(n) τ` for every level of the truncation.
pub fn probe_unitary_blocks(tau: f64, params: &ModelParams, kappa_prime: f64, trunc: &Truncation) -> Result<Vec<ProbeRotation>> {
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("probe time must be finite and >= 0, got {tau}")));
    }
    check_kappa_prime(kappa_prime)?;
    Ok(probe_mode_function(params, trunc.dim()).into_iter().map(|f| ProbeRotation { theta: kappa_prime * f * tau }).collect())
}

fn check_kappa_prime(kappa_prime: f64) -> Result<()> {
    if !(kappa_prime > 0.0 && kappa_prime.is_finite()) {
        return Err(Error::InvalidParameter(format!("|kappa'| must be > 0, got {kappa_prime}")));
    }
    Ok(())
}

/// One probe cycle followed by a no-fluorescence outcome. Returns the
/// unnormalized conditioned state `|2⟩⟨2| ⊗ ⟨2|UρU†|2⟩` and the weight
/// `Tr⟨1|UρU†|1⟩` removed by the fluorescence branch.
pub fn probe_cycle_split(state: &VibronicState, rotations: &[ProbeRotation], chi: f64) -> Result<(VibronicState, f64)> {
    let d = state.dim();
    if rotations.len() != d {
        return Err(Error::InvalidParameter(format!("{} rotations for a {d}-level state", rotations.len())));
    }
    let u: Vec<[[C64; 2]; 2]> = rotations.iter().map(|r| r.matrix(chi)).collect();
    let project = |row: usize| {
        Array2::from_shape_fn((d, d), |(n, np)| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    acc += u[n][row][i] * state.block(i, j)[[n, np]] * u[np][row][j].conj();
                }
            }
            acc
        })
    };
    let kept = project(LEVEL_2);
    let fluorescent = linalg::trace(&project(LEVEL_1)).re;
    let z = Array2::zeros((d, d));
    let out = VibronicState::from_parts([[z.clone(), z.clone()], [z, kept]]);
    Ok((out, fluorescent))
}

/// One probe cycle conditioned on no fluorescence; the trace of the
/// result is the no-fluorescence probability.
pub fn probe_cycle(state: &VibronicState, rotations: &[ProbeRotation], chi: f64) -> Result<VibronicState> {
    probe_cycle_split(state, rotations, chi).map(|(s, _)| s)
}

/// Displacement, laser phase and interaction times of one probe sequence.
/// Times are in units of 1/|κ|, `kappa_prime` is |κ'| in units of |κ|.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSchedule {
    pub displacement: C64,
    pub times: Vec<f64>,
    pub kappa_prime: f64,
    /// Laser phase `χ` of the probe cycles.
    pub laser_phase: f64,
}

impl ProbeSchedule {
    pub fn new(displacement: C64, times: Vec<f64>, kappa_prime: f64) -> Result<Self> {
        let s = Self { displacement, times, kappa_prime, laser_phase: 0.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_phase(mut self, chi: f64) -> Self {
        self.laser_phase = chi;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() {
            return Err(Error::InvalidParameter("probe schedule needs at least one interaction time".into()));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidParameter(format!("probe times must be finite and > 0, got {t}")));
        }
        check_kappa_prime(self.kappa_prime)
    }

    /// Mixing angles of cycle `q` for each level.
    fn angles<'a>(&self, f0: &'a [f64], q: usize) -> impl Iterator<Item = f64> + 'a {
        let scale = self.kappa_prime * self.times[q];
        f0.iter().map(move |f| scale * f)
    }

    /// `∏_{q≥2} cos²θ_{q,n}`, the attenuation of `ρ_22^{nn}` by the cycles
    /// after the first.
    pub fn later_cycle_factors(&self, f0: &[f64]) -> Vec<f64> {
        let mut out = vec![1.0; f0.len()];
        for q in 1..self.times.len() {
            for (o, th) in out.iter_mut().zip(self.angles(f0, q)) {
                *o *= th.cos().powi(2);
            }
        }
        out
    }
}

/// Runs the schedule on `state0`: displace, then K probe cycles, each
/// conditioned on no fluorescence. Returns the unnormalized final state.
pub fn run_schedule(state0: &VibronicState, schedule: &ProbeSchedule, params: &ModelParams, trunc: &Truncation) -> Result<VibronicState> {
    schedule.validate()?;
    let mut state = displace_vibronic(state0, schedule.displacement, trunc)?;
    for &tau in &schedule.times {
        let rot = probe_unitary_blocks(tau, params, schedule.kappa_prime, trunc)?;
        state = probe_cycle(&state, &rot, schedule.laser_phase)?;
    }
    Ok(state)
}

/// Unknowns solved for at each level.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DesignBasis {
    /// `ρ_22^{nn}` only; valid when the displaced state has no |1⟩
    /// population or electronic coherence.
    Level2,
    /// `ρ_11^{nn}`, `ρ_22^{nn}`, `Re ρ_21^{nn}`, `Im ρ_21^{nn}`.
    Full,
}

impl DesignBasis {
    fn per_level(self) -> usize {
        match self {
            DesignBasis::Level2 => 1,
            DesignBasis::Full => 4,
        }
    }
}

/// Default schedule family for one displacement. Level-2: single cycles
/// with `τ_s = τ₀ s/|κ'|`, `s = 1..=dim`. Full: for laser phases 0 and π/2,
/// every single cycle of the ladder and every ordered pair of ladder times.
pub fn schedule_family(alpha: C64, basis: DesignBasis, dim: usize, kappa_prime: f64, tau0: Option<f64>) -> Result<Vec<ProbeSchedule>> {
    check_kappa_prime(kappa_prime)?;
    let step = match basis {
        DesignBasis::Level2 => tau0.unwrap_or(LEVEL2_TAU0),
        DesignBasis::Full => tau0.unwrap_or(FULL_TAU0),
    } / kappa_prime;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("ladder step must be > 0, got {step}")));
    }
    let ladder: Vec<f64> = (1..=dim).map(|s| step * s as f64).collect();
    schedules_from_ladder(alpha, basis, &ladder, kappa_prime)
}

/// Schedule family built on explicit interaction times, arranged as in
/// [`schedule_family`].
pub fn schedules_from_ladder(alpha: C64, basis: DesignBasis, ladder: &[f64], kappa_prime: f64) -> Result<Vec<ProbeSchedule>> {
    if ladder.is_empty() {
        return Err(Error::InvalidParameter("empty probe-time ladder".into()));
    }
    let mut out = Vec::new();
    match basis {
        DesignBasis::Level2 => {
            for &t in ladder {
                out.push(ProbeSchedule::new(alpha, vec![t], kappa_prime)?);
            }
        }
        DesignBasis::Full => {
            for chi in [0.0, FRAC_PI_2] {
                for &t1 in ladder {
                    out.push(ProbeSchedule::new(alpha, vec![t1], kappa_prime)?.with_phase(chi));
                    for &t2 in ladder {
                        out.push(ProbeSchedule::new(alpha, vec![t1, t2], kappa_prime)?.with_phase(chi));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Linear map from the displaced diagonal elements to the no-fluorescence
/// probabilities, one row per schedule. For a first cycle of angle θ and
/// laser phase χ the probability is
/// `Σ_n T_n [sin²θ_n ρ_11^{nn} + cos²θ_n ρ_22^{nn} − sin2θ_n Im(e^{iχ} ρ_21^{nn})]`,
/// with `T_n` the later-cycle factors.
pub fn design_matrix(schedules: &[ProbeSchedule], f0: &[f64], basis: DesignBasis) -> Result<Array2<f64>> {
    let d = f0.len();
    let width = basis.per_level() * d;
    let mut a = Array2::zeros((schedules.len(), width));
    for (r, s) in schedules.iter().enumerate() {
        s.validate()?;
        let later = s.later_cycle_factors(f0);
        let (sc, cc) = s.laser_phase.sin_cos();
        for (n, th) in s.angles(f0, 0).enumerate() {
            let (sn, cn) = th.sin_cos();
            let t = later[n];
            match basis {
                DesignBasis::Level2 => a[[r, n]] = cn * cn * t,
                DesignBasis::Full => {
                    a[[r, n]] = sn * sn * t;
                    a[[r, d + n]] = cn * cn * t;
                    a[[r, 2 * d + n]] = -2.0 * sn * cn * sc * t;
                    a[[r, 3 * d + n]] = -2.0 * sn * cn * cc * t;
                }
            }
        }
    }
    Ok(a)
}

/// Condition number of the design matrix of `schedules`.
pub fn design_condition(schedules: &[ProbeSchedule], f0: &[f64], basis: DesignBasis) -> Result<f64> {
    let sv = linalg::singular_values(&design_matrix(schedules, f0, basis)?);
    let lo = *sv.last().unwrap_or(&0.0);
    Ok(if lo > 0.0 { sv[0] / lo } else { f64::INFINITY })
}

/// How schedule probabilities are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistics {
    /// Exact probabilities.
    Ideal,
    /// Binomial counts from `shots` repetitions per schedule; schedule `r`
    /// draws from ChaCha stream `r` of `seed`.
    Shots { shots: u64, seed: u64 },
}

/// Displaced diagonal elements `ρ_ij^{nn}(α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RhoNnTable {
    pub alpha: C64,
    pub rho11: Vec<f64>,
    pub rho22: Vec<f64>,
    pub rho21: Vec<C64>,
    /// `‖A x − p‖₂` of the inversion; zero for direct tables.
    pub residual: f64,
    /// Design condition number; 1 for direct tables.
    pub condition: f64,
    pub statistics: Statistics,
}

impl RhoNnTable {
    /// Exact table read off the displaced state.
    pub fn direct(state0: &VibronicState, alpha: C64, trunc: &Truncation) -> Result<Self> {
        let s = displace_vibronic(state0, alpha, trunc)?;
        let diag = |i: usize, j: usize| -> Vec<C64> { s.block(i, j).diag().to_vec() };
        Ok(Self {
            alpha,
            rho11: diag(LEVEL_1, LEVEL_1).iter().map(|z| z.re).collect(),
            rho22: diag(LEVEL_2, LEVEL_2).iter().map(|z| z.re).collect(),
            rho21: diag(LEVEL_2, LEVEL_1),
            residual: 0.0,
            condition: 1.0,
            statistics: Statistics::Ideal,
        })
    }

    pub fn len(&self) -> usize {
        self.rho22.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho22.is_empty()
    }

    /// `ρ_ij^{nn}` with `i, j ∈ {LEVEL_1, LEVEL_2}`.
    pub fn element(&self, i: usize, j: usize, n: usize) -> C64 {
        match (i, j) {
            (LEVEL_1, LEVEL_1) => C64::new(self.rho11[n], 0.0),
            (LEVEL_2, LEVEL_2) => C64::new(self.rho22[n], 0.0),
            (LEVEL_2, LEVEL_1) => self.rho21[n],
            _ => self.rho21[n].conj(),
        }
    }

    /// Largest elementwise deviation from another table.
    pub fn max_deviation(&self, other: &RhoNnTable) -> f64 {
        let n = self.len().min(other.len());
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((self.rho11[i] - other.rho11[i]).abs());
            worst = worst.max((self.rho22[i] - other.rho22[i]).abs());
            worst = worst.max((self.rho21[i] - other.rho21[i]).norm());
        }
        worst
    }
}

/// Reconstructs `ρ_ij^{nn}(α)` from no-fluorescence probabilities of a
/// schedule family by least squares. The family must share the
/// displacement `alpha`, and its design must have condition number below
/// [`COND_LIMIT`].
pub fn extract_rho_nn(
    state0: &VibronicState,
    alpha: C64,
    schedules: &[ProbeSchedule],
    params: &ModelParams,
    trunc: &Truncation,
    basis: DesignBasis,
    statistics: Statistics,
) -> Result<RhoNnTable> {
    if schedules.is_empty() {
        return Err(Error::InvalidParameter("empty schedule family".into()));
    }
    if let Some(s) = schedules.iter().find(|s| s.displacement != alpha) {
        return Err(Error::InvalidParameter(format!("schedule displacement {} differs from alpha = {alpha}", s.displacement)));
    }
    let d = trunc.dim();
    let f0 = probe_mode_function(params, d);
    let a = design_matrix(schedules, &f0, basis)?;
    if a.nrows() < a.ncols() {
        return Err(Error::IllConditionedDesign { cond: f64::INFINITY, limit: COND_LIMIT });
    }
    let mut probs = Array1::zeros(schedules.len());
    for (r, s) in schedules.iter().enumerate() {
        probs[r] = run_schedule(state0, s, params, trunc)?.trace();
    }
    if let Statistics::Shots { shots, seed } = statistics {
        if shots == 0 {
            return Err(Error::InvalidParameter("shot budget must be positive".into()));
        }
        for (r, p) in probs.iter_mut().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let dist = Binomial::new(shots, p.clamp(0.0, 1.0)).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            *p = dist.sample(&mut rng) as f64 / shots as f64;
        }
    }
    let (x, cond) = linalg::lstsq(&a, &probs);
    if !(cond < COND_LIMIT) {
        return Err(Error::IllConditionedDesign { cond, limit: COND_LIMIT });
    }
    let residual = (&a.dot(&x) - &probs).iter().map(|v| v * v).sum::<f64>().sqrt();
    let (rho11, rho22, rho21) = match basis {
        DesignBasis::Level2 => (vec![0.0; d], x.to_vec(), vec![C64::new(0.0, 0.0); d]),
        DesignBasis::Full => (
            x.slice(ndarray::s![..d]).to_vec(),
            x.slice(ndarray::s![d..2 * d]).to_vec(),
            (0..d).map(|n| C64::new(x[2 * d + n], x[3 * d + n])).collect(),
        ),
    };
    Ok(RhoNnTable { alpha, rho11, rho22, rho21, residual, condition: cond, statistics })
}
