//! LMS/F channel estimators with optional sparsity penalties.
//!
//! All four algorithms share the LMS/F error term and differ only in the
//! zero attractor subtracted from the estimate:
//!
//! ```text
//! w̃(k+1) = w̃(k) + μ e³(k) x(k) / (e²(k) + φ) − ρ · ζ(w̃(k), w̃(k−1))
//!
//! LMS/F     ρ = 0
//! ZA        ρ = μλ       ζ = sgn(w̃(k))
//! RZA       ρ = μλ/ε     ζ = sgn(w̃(k)) / (1 + ε|w̃(k)|)
//! RL1       ρ = μλ       ζ = sgn(w̃(k)) / (δ + |w̃(k−1)|)
//! ```
//!
//! Writing the error term as `μ(k) e(k) x(k)` with `μ(k) = μe²/(e²+φ)` gives
//! the variable step-size reading of LMS/F, see [`lmsf_gain`].
//!
//! Step-size stability (`μ < 2/γ_max` for the input covariance) is not
//! enforced here; divergence is reported through [`Error::Divergence`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{check_len, ChannelVector, RegressorWindow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "LMSF")]
    PlainLmsf,
    #[serde(rename = "ZA-LMSF")]
    Za,
    #[serde(rename = "RZA-LMSF")]
    Rza,
    #[serde(rename = "RL1-LMSF")]
    Rl1,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [
        EstimatorKind::PlainLmsf,
        EstimatorKind::Za,
        EstimatorKind::Rza,
        EstimatorKind::Rl1,
    ];

    pub fn label(self) -> &'static str {
        match self {
            EstimatorKind::PlainLmsf => "LMSF",
            EstimatorKind::Za => "ZA-LMSF",
            EstimatorKind::Rza => "RZA-LMSF",
            EstimatorKind::Rl1 => "RL1-LMSF",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lmsf" | "lms/f" | "plain" => Ok(EstimatorKind::PlainLmsf),
            "za" | "za-lmsf" => Ok(EstimatorKind::Za),
            "rza" | "rza-lmsf" => Ok(EstimatorKind::Rza),
            "rl1" | "rl1-lmsf" => Ok(EstimatorKind::Rl1),
            other => Err(Error::invalid(
                "algos",
                format!("unknown algorithm `{other}` (expected lmsf, za, rza or rl1)"),
            )),
        }
    }
}

/// Algorithm choice plus every scalar it may use.
///
/// `lambda` is the regularization weight of whichever penalty `kind`
/// selects; `epsilon` is read only by RZA and `delta` only by RL1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub mu: f64,
    pub phi: f64,
    pub lambda: f64,
    pub epsilon: f64,
    pub delta: f64,
}

impl EstimatorConfig {
    pub const DEFAULT_MU: f64 = 0.005;
    pub const DEFAULT_PHI: f64 = 0.8;
    pub const DEFAULT_LAMBDA_ZA: f64 = 4e-5;
    pub const DEFAULT_LAMBDA_RZA: f64 = 4e-3;
    pub const DEFAULT_LAMBDA_RL1: f64 = 4e-5;
    pub const DEFAULT_EPSILON: f64 = 20.0;
    pub const DEFAULT_DELTA: f64 = 0.05;

    /// Reference simulation parameters for `kind`.
    pub fn reference(kind: EstimatorKind) -> Self {
        let lambda = match kind {
            EstimatorKind::PlainLmsf => 0.0,
            EstimatorKind::Za => Self::DEFAULT_LAMBDA_ZA,
            EstimatorKind::Rza => Self::DEFAULT_LAMBDA_RZA,
            EstimatorKind::Rl1 => Self::DEFAULT_LAMBDA_RL1,
        };
        Self {
            kind,
            mu: Self::DEFAULT_MU,
            phi: Self::DEFAULT_PHI,
            lambda,
            epsilon: Self::DEFAULT_EPSILON,
            delta: Self::DEFAULT_DELTA,
        }
    }

    pub fn label(&self) -> &'static str {
        self.kind.label()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.mu) {
            return Err(Error::invalid(
                "mu",
                format!("must be > 0, got {}", self.mu),
            ));
        }
        if !positive(self.phi) {
            return Err(Error::invalid(
                "phi",
                format!("must be > 0, got {}", self.phi),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            let field = match self.kind {
                EstimatorKind::Za => "lambda-za",
                EstimatorKind::Rza => "lambda-rza",
                EstimatorKind::Rl1 => "lambda-rl1",
                EstimatorKind::PlainLmsf => "lambda",
            };
            return Err(Error::invalid(
                field,
                format!("must be >= 0, got {}", self.lambda),
            ));
        }
        if self.kind == EstimatorKind::Rza && !positive(self.epsilon) {
            return Err(Error::invalid(
                "epsilon",
                format!("must be > 0, got {}", self.epsilon),
            ));
        }
        if self.kind == EstimatorKind::Rl1 && !positive(self.delta) {
            return Err(Error::invalid(
                "delta",
                format!("must be > 0, got {}", self.delta),
            ));
        }
        Ok(())
    }

    /// Shrinkage intensity ρ multiplying the zero attractor.
    pub fn rho(&self) -> f64 {
        match self.kind {
            EstimatorKind::PlainLmsf => 0.0,
            EstimatorKind::Za | EstimatorKind::Rl1 => self.mu * self.lambda,
            EstimatorKind::Rza => self.mu * self.lambda / self.epsilon,
        }
    }
}

/// Current and previous estimate plus the iteration counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    w_curr: ChannelVector,
    w_prev: ChannelVector,
    iteration: u64,
}

impl EstimatorState {
    /// Zero estimate at `k = 0`; `w̃(−1)` is also zero.
    pub fn new(n_taps: usize) -> Self {
        Self {
            w_curr: ChannelVector::zeros(n_taps),
            w_prev: ChannelVector::zeros(n_taps),
            iteration: 0,
        }
    }

    pub fn from_parts(
        w_curr: ChannelVector,
        w_prev: ChannelVector,
        iteration: u64,
    ) -> Result<Self> {
        check_len(w_curr.len(), w_prev.len())?;
        Ok(Self {
            w_curr,
            w_prev,
            iteration,
        })
    }

    pub fn current(&self) -> &ChannelVector {
        &self.w_curr
    }

    pub fn previous(&self) -> &ChannelVector {
        &self.w_prev
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn len(&self) -> usize {
        self.w_curr.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_curr.is_empty()
    }

    /// In-place form of [`step`]. Returns the a-priori error `e(k)`.
    ///
    /// After a [`Error::Divergence`] the state is partially updated and
    /// should be discarded.
    pub fn advance(&mut self, x: &RegressorWindow, d: f64, cfg: &EstimatorConfig) -> Result<f64> {
        let e = innovation_error(self, x, d)?;
        let k = self.iteration;
        if !e.is_finite() {
            return Err(Error::Divergence { iteration: k });
        }
        let e2 = e * e;
        let gain = cfg.mu * e2 * e / (e2 + cfg.phi);
        let rho = cfg.rho();
        let kind = if rho == 0.0 {
            EstimatorKind::PlainLmsf
        } else {
            cfg.kind
        };

        let curr = self.w_curr.taps_mut();
        let prev = self.w_prev.taps_mut();
        for ((c, p), &xi) in curr.iter_mut().zip(prev.iter_mut()).zip(x.samples()) {
            let w = *c;
            let mut next = w + gain * xi;
            match kind {
                EstimatorKind::PlainLmsf => {}
                EstimatorKind::Za => next -= rho * sgn(w),
                EstimatorKind::Rza => next -= rho * sgn(w) / (1.0 + cfg.epsilon * w.abs()),
                EstimatorKind::Rl1 => next -= rho * sgn(w) / (cfg.delta + p.abs()),
            }
            if !next.is_finite() {
                return Err(Error::Divergence { iteration: k });
            }
            *p = w;
            *c = next;
        }
        self.iteration = k + 1;
        Ok(e)
    }
}

/// Sign with `sgn(0) = 0`.
#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A-priori estimation error `e(k) = d(k) − w̃ᵀ(k) x(k)`.
pub fn innovation_error(state: &EstimatorState, x: &RegressorWindow, d: f64) -> Result<f64> {
    Ok(d - state.w_curr.dot(x)?)
}

/// Variable step size `μ(k) = μe²/(e² + φ)` of the LMS/F update.
#[inline]
pub fn lmsf_gain(e: f64, mu: f64, phi: f64) -> f64 {
    let e2 = e * e;
    mu * e2 / (e2 + phi)
}

/// Zero attractor of ℓ1 regularization: `sgn(w)`.
pub fn penalty_za(w: &ChannelVector) -> Vec<f64> {
    w.taps().iter().map(|&v| sgn(v)).collect()
}

/// Log-sum attractor: `sgn(w) / (1 + ε|w|)`.
pub fn penalty_rza(w: &ChannelVector, epsilon: f64) -> Vec<f64> {
    debug_assert!(epsilon > 0.0);
    w.taps()
        .iter()
        .map(|&v| sgn(v) / (1.0 + epsilon * v.abs()))
        .collect()
}

/// Reweighted ℓ1 attractor: `sgn(w_curr) / (δ + |w_prev|)`.
///
/// The sign follows the current estimate, the weight the previous one.
pub fn penalty_rl1(w_prev: &ChannelVector, w_curr: &ChannelVector, delta: f64) -> Result<Vec<f64>> {
    check_len(w_curr.len(), w_prev.len())?;
    debug_assert!(delta > 0.0);
    Ok(w_curr
        .taps()
        .iter()
        .zip(w_prev.taps())
        .map(|(&c, &p)| sgn(c) / (delta + p.abs()))
        .collect())
}

/// One update of the estimator selected by `cfg`.
pub fn step(
    state: &EstimatorState,
    x: &RegressorWindow,
    d: f64,
    cfg: &EstimatorConfig,
) -> Result<EstimatorState> {
    cfg.validate()?;
    check_len(state.len(), x.len())?;
    let mut next = state.clone();
    next.advance(x, d, cfg)?;
    Ok(next)
}

/// One row of the penalty-strength comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyRow {
    pub w: f64,
    pub zeta_za: f64,
    pub zeta_rza: f64,
    pub zeta_rl1: f64,
}

/// Evaluates the three attractors on a uniform grid over `[−1, 1]`.
///
/// The RL1 weight uses the same coefficient for previous and current
/// estimate. Odd grid sizes include `w = 0` exactly.
pub fn penalty_curve(epsilon: f64, delta: f64, grid_size: usize) -> Result<Vec<PenaltyRow>> {
    if grid_size < 2 {
        return Err(Error::invalid("grid", "need at least two grid points"));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be > 0"));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", "must be > 0"));
    }
    let last = (grid_size - 1) as f64;
    Ok((0..grid_size)
        .map(|j| {
            let w = -1.0 + 2.0 * j as f64 / last;
            PenaltyRow {
                w,
                zeta_za: sgn(w),
                zeta_rza: sgn(w) / (1.0 + epsilon * w.abs()),
                zeta_rl1: sgn(w) / (delta + w.abs()),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cv(v: &[f64]) -> ChannelVector {
        ChannelVector::new(v.to_vec()).unwrap()
    }

    fn win(v: &[f64]) -> RegressorWindow {
        RegressorWindow::from_samples(v.to_vec())
    }

    #[test]
    fn innovation_error_examples() {
        let zero = EstimatorState::new(3);
        assert_eq!(
            innovation_error(&zero, &win(&[1.0, 2.0, 3.0]), 5.0).unwrap(),
            5.0
        );

        let w = cv(&[0.3, -0.1]);
        let perfect = EstimatorState::from_parts(w.clone(), w.clone(), 4).unwrap();
        let x = win(&[2.0, -1.0]);
        let d = w.dot(&x).unwrap();
        assert_eq!(innovation_error(&perfect, &x, d).unwrap(), 0.0);

        let ones = EstimatorState::from_parts(cv(&[1.0, 1.0]), cv(&[0.0, 0.0]), 1).unwrap();
        assert_eq!(
            innovation_error(&ones, &win(&[2.0, 3.0]), 4.0).unwrap(),
            -1.0
        );

        assert!(matches!(
            innovation_error(&zero, &win(&[1.0]), 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gain_examples() {
        assert_eq!(lmsf_gain(0.0, 0.005, 0.8), 0.0);
        let phi: f64 = 0.8;
        assert!((lmsf_gain(phi.sqrt(), 0.005, phi) - 0.0025).abs() < 1e-15);
        assert!((lmsf_gain(2.0, 0.005, 0.8) - 0.005 * 4.0 / 4.8).abs() < 1e-15);
        assert!((lmsf_gain(2.0, 0.005, 0.8) - 0.0041667).abs() < 1e-7);
    }

    #[test]
    fn za_penalty_examples() {
        assert_eq!(penalty_za(&cv(&[0.7, -0.2, 0.0])), vec![1.0, -1.0, 0.0]);
        assert_eq!(penalty_za(&cv(&[0.0; 4])), vec![0.0; 4]);
        assert_eq!(penalty_za(&cv(&[-1.0, 1.0])), vec![-1.0, 1.0]);
    }

    #[test]
    fn rza_penalty_examples() {
        let p = penalty_rza(&cv(&[0.0, 1.0, -0.05]), 20.0);
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 1.0 / 21.0).abs() < 1e-15);
        assert!((p[1] - 0.047619).abs() < 1e-6);
        assert!((p[2] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn rl1_penalty_examples() {
        let p = penalty_rl1(&cv(&[0.9, 0.15]), &cv(&[0.0, 0.3]), 0.05).unwrap();
        assert_eq!(p[0], 0.0);
        assert!((p[1] - 5.0).abs() < 1e-12);
        assert!(penalty_rl1(&cv(&[0.0]), &cv(&[0.0, 1.0]), 0.05).is_err());

        let w = cv(&[0.4, -0.01, 0.0, 1.0, -0.7]);
        let rl1 = penalty_rl1(&w, &w, 1.0 / 20.0).unwrap();
        let rza = penalty_rza(&w, 20.0);
        for (a, b) in rl1.iter().zip(&rza) {
            assert!((a - 20.0 * b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn za_single_step_by_hand() {
        let state = EstimatorState::from_parts(cv(&[0.5, 0.0]), cv(&[0.0, 0.0]), 0).unwrap();
        let cfg = EstimatorConfig::reference(EstimatorKind::Za);
        let next = step(&state, &win(&[1.0, 0.0]), 1.0, &cfg).unwrap();
        // e = 0.5, error term 0.005 * 0.125 / 1.05, shrink 0.005 * 4e-5
        let expected = 0.5 + 0.005 * 0.125 / 1.05 - 2e-7;
        assert!((next.current().taps()[0] - expected).abs() < 1e-15);
        assert!((next.current().taps()[0] - 0.5005950).abs() < 1e-7);
        assert_eq!(next.current().taps()[1], 0.0);
        assert_eq!(next.previous(), state.current());
        assert_eq!(next.iteration(), 1);
    }

    #[test]
    fn zero_error_plain_step_is_identity() {
        let w = cv(&[0.2, -0.3, 0.0]);
        let state = EstimatorState::from_parts(w.clone(), cv(&[0.1, 0.1, 0.1]), 9).unwrap();
        let x = win(&[1.0, -1.0, 1.0]);
        let d = w.dot(&x).unwrap();
        let cfg = EstimatorConfig::reference(EstimatorKind::PlainLmsf);
        let next = step(&state, &x, d, &cfg).unwrap();
        assert_eq!(next.current(), &w);
    }

    #[test]
    fn zero_fixed_point_for_every_kind() {
        let state = EstimatorState::new(6);
        let x = win(&[1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
        for kind in EstimatorKind::ALL {
            let next = step(&state, &x, 0.0, &EstimatorConfig::reference(kind)).unwrap();
            assert_eq!(next.current(), &ChannelVector::zeros(6), "{kind}");
        }
    }

    #[test]
    fn config_validation_names_field() {
        let mut cfg = EstimatorConfig::reference(EstimatorKind::Rl1);
        cfg.mu = -1.0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter { field: "mu", .. })
        ));
        let mut cfg = EstimatorConfig::reference(EstimatorKind::Rl1);
        cfg.delta = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter { field: "delta", .. })
        ));
        let mut cfg = EstimatorConfig::reference(EstimatorKind::Rza);
        cfg.epsilon = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter {
                field: "epsilon",
                ..
            })
        ));
        let mut cfg = EstimatorConfig::reference(EstimatorKind::Za);
        cfg.lambda = -1e-3;
        assert!(matches!(
            cfg.validate(),
            Err(Error::InvalidParameter {
                field: "lambda-za",
                ..
            })
        ));
        // epsilon is irrelevant to ZA
        let mut cfg = EstimatorConfig::reference(EstimatorKind::Za);
        cfg.epsilon = 0.0;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn divergence_is_reported() {
        let state = EstimatorState::from_parts(cv(&[0.0, 0.0]), cv(&[0.0, 0.0]), 17).unwrap();
        let cfg = EstimatorConfig::reference(EstimatorKind::PlainLmsf);
        let err = step(&state, &win(&[1e200, 1e200]), 1e300, &cfg).unwrap_err();
        assert_eq!(err, Error::Divergence { iteration: 17 });
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("RL1".parse::<EstimatorKind>().unwrap(), EstimatorKind::Rl1);
        assert_eq!(
            "lmsf".parse::<EstimatorKind>().unwrap(),
            EstimatorKind::PlainLmsf
        );
        assert_eq!(
            "ZA-LMSF".parse::<EstimatorKind>().unwrap(),
            EstimatorKind::Za
        );
        assert!("nlms".parse::<EstimatorKind>().is_err());
    }

    #[test]
    fn curve_grid() {
        let rows = penalty_curve(20.0, 0.05, 201).unwrap();
        assert_eq!(rows.len(), 201);
        assert_eq!(rows[0].w, -1.0);
        assert_eq!(rows[200].w, 1.0);
        let mid = rows[100];
        assert_eq!(
            (mid.w, mid.zeta_za, mid.zeta_rza, mid.zeta_rl1),
            (0.0, 0.0, 0.0, 0.0)
        );
        let end = rows[200];
        assert_eq!(end.zeta_za, 1.0);
        assert!((end.zeta_rza - 0.047619).abs() < 1e-6);
        assert!((end.zeta_rl1 - 0.952381).abs() < 1e-6);
        assert!(penalty_curve(20.0, 0.05, 1).is_err());
        assert!(penalty_curve(0.0, 0.05, 5).is_err());
    }

    proptest! {
        #[test]
        fn zero_lambda_matches_plain_bitwise(
            taps in prop::collection::vec(-1.0f64..1.0, 1..32),
            seed_x in prop::collection::vec(-1.0f64..1.0, 32),
            d in -3.0f64..3.0,
        ) {
            let n = taps.len();
            let w = ChannelVector::new(taps.clone()).unwrap();
            let prev = ChannelVector::new(taps.iter().map(|t| t * 0.5).collect()).unwrap();
            let state = EstimatorState::from_parts(w, prev, 3).unwrap();
            let x = RegressorWindow::from_samples(seed_x[..n].to_vec());
            let plain = step(&state, &x, d, &EstimatorConfig::reference(EstimatorKind::PlainLmsf)).unwrap();
            for kind in EstimatorKind::ALL {
                let mut cfg = EstimatorConfig::reference(kind);
                cfg.lambda = 0.0;
                let out = step(&state, &x, d, &cfg).unwrap();
                for (a, b) in out.current().taps().iter().zip(plain.current().taps()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }

        #[test]
        fn rza_never_exceeds_za(v in -1.0f64..1.0, eps in 1e-3f64..100.0) {
            let w = ChannelVector::new(vec![v]).unwrap();
            let rza = penalty_rza(&w, eps)[0].abs();
            let za = penalty_za(&w)[0].abs();
            prop_assert!(rza <= za);
            if v != 0.0 {
                prop_assert_eq!(za, 1.0);
            }
        }

        #[test]
        fn step_is_deterministic(
            taps in prop::collection::vec(-1.0f64..1.0, 8),
            xs in prop::collection::vec(-1.0f64..1.0, 8),
            d in -2.0f64..2.0,
        ) {
            let state = EstimatorState::from_parts(
                ChannelVector::new(taps.clone()).unwrap(),
                ChannelVector::new(taps).unwrap(),
                0,
            ).unwrap();
            let x = RegressorWindow::from_samples(xs);
            for kind in EstimatorKind::ALL {
                let cfg = EstimatorConfig::reference(kind);
                prop_assert_eq!(step(&state, &x, d, &cfg).unwrap(), step(&state, &x, d, &cfg).unwrap());
            }
        }
    }
}
